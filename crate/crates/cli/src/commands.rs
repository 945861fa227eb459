use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use orthoport::em::{
    assemble_rrho, assemble_w, assemble_z0, omega_of, radiation_part, reactance_part, FrequencyGrid, ImpedanceSystem,
    OperatorMatrix, Role, W_STEP,
};
use orthoport::geometry::find_generator_cell;
use orthoport::io::{
    character_table, fmt_num, gnuplot_script, join_labels, kappa_table, mapping_table, per_frequency_table,
    scan_summary, scan_trace, write_operator, Table,
};
use orthoport::optimizer::{
    per_frequency_best, reference_comparison, scan as run_scan, ScanContext, ScanResult, ScanSpec,
};
use orthoport::point_group::Species;
use orthoport::symmetry::{
    adapt_vector, build_adapted_basis, characteristic_modes, orthogonality_check, pencil_residual, realizable_species,
};
use orthoport::{CMatrix, CVector, C64};

use crate::config::{OperatorName, Scenario};
use crate::CliError;

fn write(dir: &Path, name: &str, table: &Table) -> Result<(), CliError> {
    table.write(&dir.join(name))?;
    Ok(())
}

/// Every requested operator at one frequency, assembling only what is needed.
fn operators_at(s: &Scenario, ka: f64, names: &[OperatorName]) -> Result<Vec<(OperatorName, CMatrix)>, CliError> {
    use OperatorName::*;
    let needs = |set: &[OperatorName]| names.iter().any(|n| set.contains(n));
    let z0 = if needs(&[Z, Z0, R0, X0, YhR0Y, YhWY]) { Some(assemble_z0(&s.basis, ka)) } else { None };
    let w = if needs(&[W, YhWY]) { Some(assemble_w(&s.basis, ka, W_STEP)?) } else { None };
    let rrho = if needs(&[Z, Rrho, YhR0Y, YhWY]) { Some(assemble_rrho(&s.basis, s.rho)?) } else { None };
    let z = match (&z0, &rrho) {
        (Some(z0), Some(r)) => Some(z0.with_data(z0.role, &z0.data + &r.data)),
        _ => None,
    };
    let y = if needs(&[YhR0Y, YhWY]) {
        let sys = ImpedanceSystem::new(z.clone().expect("assembled above"))?;
        Some(sys.solve_matrix(&CMatrix::identity(s.basis.len(), s.basis.len())))
    } else {
        None
    };
    let n = s.basis.len();
    Ok(names
        .iter()
        .map(|&name| {
            let m = match name {
                Identity => CMatrix::identity(n, n),
                Z => z.as_ref().expect("assembled").data.clone(),
                Z0 => z0.as_ref().expect("assembled").data.clone(),
                R0 => radiation_part(z0.as_ref().expect("assembled")).data,
                X0 => reactance_part(z0.as_ref().expect("assembled")).data,
                W => w.as_ref().expect("assembled").data.clone(),
                Rrho => rrho.as_ref().expect("assembled").data.clone(),
                YhR0Y => {
                    let y = y.as_ref().expect("solved");
                    y.adjoint() * radiation_part(z0.as_ref().expect("assembled")).data * y
                }
                YhWY => {
                    let y = y.as_ref().expect("solved");
                    y.adjoint() * &w.as_ref().expect("assembled").data * y
                }
            };
            (name, m)
        })
        .collect())
}

fn check(failures: &[String]) -> Result<(), CliError> {
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(failures.join("; ")))
    }
}

fn pass(ok: bool) -> String {
    if ok { "PASS" } else { "FAIL" }.to_string()
}

pub fn adapt(s: &Scenario, tol: f64) -> Result<(), CliError> {
    let n = s.basis.len();
    let preferred: Vec<usize> = s.positions.iter().map(|c| c.index).collect();
    let cell = find_generator_cell(&s.maps, &preferred);
    write(&s.out, "character_table.csv", &character_table(&s.group))?;
    write(&s.out, "mapping_matrices.csv", &mapping_table(&s.maps))?;

    let species = s.species.clone().unwrap_or_else(|| s.group.species());
    let mut realizable = Table::new(["position", "basis_index", "orbit_size", "on_symmetry_element", "species"]);
    let mut vectors = Table::new(["position", "species", "index", "re", "im"]);
    let mut per_position: Vec<(usize, Vec<(Species, CVector)>)> = Vec::new();
    let mut report = String::new();
    for c in &s.positions {
        let reach = realizable_species(c.index, &s.group, &s.maps);
        let orbit = cell.orbit_of(c.index).map_or(1, Vec::len);
        let labels: Vec<String> = reach.iter().map(|&sp| s.group.species_label(sp)).collect();
        realizable.push(vec![
            c.label.to_string(),
            (c.index + 1).to_string(),
            orbit.to_string(),
            (orbit < s.group.order()).to_string(),
            labels.join(" "),
        ]);
        let _ = writeln!(
            report,
            "position {}: {} of {} species: {}",
            c.label,
            reach.len(),
            s.group.species().len(),
            labels.join(" ")
        );
        let mut v = CVector::zeros(n);
        v[c.index] = C64::new(1.0, 0.0);
        let mut adapted = Vec::new();
        for &sp in &species {
            let a = adapt_vector(&v, &s.group, &s.maps, &cell, sp)?;
            if a.collided {
                continue;
            }
            for (i, z) in a.vector.iter().enumerate() {
                vectors.push(vec![
                    c.label.to_string(),
                    s.group.species_label(sp),
                    (i + 1).to_string(),
                    fmt_num(z.re),
                    fmt_num(z.im),
                ]);
            }
            adapted.push((sp, a.vector));
        }
        per_position.push((c.label, adapted));
    }
    write(&s.out, "realizable_species.csv", &realizable)?;
    write(&s.out, "adapted_vectors.csv", &vectors)?;

    // identity always; the electromagnetic operators need a frequency
    let mut orth = Table::new(["ka", "position", "operator", "max_cross", "pass"]);
    let mut failures = Vec::new();
    let mut runs: Vec<(Option<f64>, Vec<OperatorName>)> = vec![(None, vec![OperatorName::Identity])];
    if let Some(grid) = &s.grid {
        let em: Vec<OperatorName> = s.operators.iter().copied().filter(|o| *o != OperatorName::Identity).collect();
        if !em.is_empty() {
            runs.extend(grid.ka.iter().map(|&ka| (Some(ka), em.clone())));
        }
    }
    for (ka, names) in runs {
        let ops = operators_at(s, ka.unwrap_or(1.0), &names)?;
        let refs: Vec<&CMatrix> = ops.iter().map(|(_, m)| m).collect();
        for (label, adapted) in &per_position {
            let rep = orthogonality_check(adapted, &refs);
            for ((name, _), worst) in ops.iter().zip(&rep.max_cross) {
                let ok = *worst <= tol;
                if !ok {
                    failures.push(format!("position {label}, {name}: cross-species {worst:e} > {tol:e}"));
                }
                orth.push(vec![
                    ka.map_or("".into(), fmt_num),
                    label.to_string(),
                    name.to_string(),
                    fmt_num(*worst),
                    pass(ok),
                ]);
            }
        }
    }
    write(&s.out, "orthogonality.csv", &orth)?;
    fs::write(s.out.join("adapt_report.txt"), &report)?;
    print!("{report}");
    check(&failures)
}

pub fn modes(s: &Scenario, tol: f64) -> Result<(), CliError> {
    use OperatorName::*;
    if !s.operators.iter().any(|o| matches!(o, R0 | Z0 | Z)) {
        return Err(s.operators_error("characteristic modes need R0 (or Z0) among the operators"));
    }
    let grid = s.grid()?;
    let basis = build_adapted_basis(&s.group, &s.maps, s.basis.len())?;
    let mut names = s.operators.clone();
    if !names.contains(&W) {
        names.push(W);
    }
    let mut eig = Table::new(["ka", "species", "mode", "lambda", "modal_significance", "residual"]);
    let mut orth = Table::new(["ka", "operator", "max_cross", "pass"]);
    let mut coupling = Table::new(["ka", "species", "max_offdiag_w"]);
    let mut failures = Vec::new();
    for &ka in &grid.ka {
        let z0 = assemble_z0(&s.basis, ka);
        let (r0, x0) = (radiation_part(&z0), reactance_part(&z0));
        let sets = characteristic_modes(&r0, &x0, Some(&basis))?;
        let ops = operators_at(s, ka, &names)?;
        let w = &ops.iter().find(|(n, _)| *n == W).expect("W requested").1;
        if s.dump_operators {
            dump(s, ka, &ops)?;
        }
        let mut all = Vec::new();
        for set in &sets {
            let sp = set.species.expect("per-species solve");
            let label = s.group.species_label(sp);
            for (m, &lambda) in set.eigenvalues.iter().enumerate() {
                let i = set.modes.column(m).into_owned();
                let res = pencil_residual(&x0.data, &r0.data, lambda, &i);
                if res > tol {
                    failures.push(format!("ka {ka}, {label} mode {}: residual {res:e}", m + 1));
                }
                let ms = 1.0 / C64::new(1.0, lambda).norm();
                eig.push(vec![
                    fmt_num(ka),
                    label.clone(),
                    (m + 1).to_string(),
                    fmt_num(lambda),
                    fmt_num(ms),
                    fmt_num(res),
                ]);
                all.push((sp, i));
            }
            let wm = set.modes.adjoint() * w * &set.modes * C64::new(0.5, 0.0);
            let off = (0..wm.nrows())
                .flat_map(|a| (0..wm.ncols()).filter(move |&b| b != a).map(move |b| (a, b)))
                .map(|(a, b)| wm[(a, b)].norm())
                .fold(0.0, f64::max);
            coupling.push(vec![fmt_num(ka), label, fmt_num(off)]);
        }
        let refs: Vec<&CMatrix> = ops.iter().map(|(_, m)| m).collect();
        // modes deep in the null space of R0 are only resolved normwise
        let rep = orthogonality_check(&all, &refs);
        for ((name, _), worst) in ops.iter().zip(&rep.max_cross_normwise) {
            let ok = *worst <= tol;
            if !ok {
                failures.push(format!("ka {ka}, {name}: cross-species {worst:e}"));
            }
            orth.push(vec![fmt_num(ka), name.to_string(), fmt_num(*worst), pass(ok)]);
        }
        println!(
            "ka {ka}: {} modes over {} species, worst cross-species coupling {:.2e}",
            all.len(),
            sets.len(),
            rep.worst_normwise()
        );
    }
    write(&s.out, "modes_eigenvalues.csv", &eig)?;
    write(&s.out, "modes_orthogonality.csv", &orth)?;
    write(&s.out, "modes_w_coupling.csv", &coupling)?;
    check(&failures)
}

/// `op_<name>_ka<ka>.opmx`; operators without a role of their own are tagged `custom`.
fn dump(s: &Scenario, ka: f64, ops: &[(OperatorName, CMatrix)]) -> Result<(), CliError> {
    use OperatorName::*;
    let omega = omega_of(ka, s.basis.radius());
    for (name, m) in ops {
        let role = match name {
            Z0 => Role::Z0,
            R0 => Role::R0,
            X0 => Role::X0,
            W => Role::W,
            Rrho => Role::Rrho,
            Identity | Z | YhR0Y | YhWY => Role::Custom,
        };
        let path = s.out.join(format!("op_{name}_ka{ka}.opmx"));
        let mut file = std::io::BufWriter::new(fs::File::create(&path)?);
        write_operator(&OperatorMatrix::new(role, m.clone(), omega, ka), &mut file)?;
        std::io::Write::flush(&mut file)?;
    }
    Ok(())
}

fn spec(s: &Scenario, grid: FrequencyGrid, n_xi: usize) -> Result<ScanSpec, CliError> {
    let loss = if s.rho > 0.0 { Some(assemble_rrho(&s.basis, s.rho)?) } else { None };
    Ok(ScanSpec {
        candidates: s.candidates.clone(),
        n_xi,
        grid,
        species: s.species.clone(),
        z0_line: s.z0_line,
        loss,
        budget: s.budget,
    })
}

fn ctx(s: &Scenario) -> ScanContext<'_> {
    ScanContext { basis: &s.basis, group: &s.group, maps: &s.maps }
}

fn report(s: &Scenario, result: &ScanResult, limit: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:>4}  {:<16} {:>4} {:>7}  {:>8}", "rank", "positions", "N_p", "states", "t_RMS");
    for (r, e) in result.ranked.iter().take(limit).enumerate() {
        let states = if e.reduced { format!("{}*", e.species.len()) } else { e.species.len().to_string() };
        let _ = writeln!(
            out,
            "{:>4}  {:<16} {:>4} {:>7}  {:>8.4}",
            r + 1,
            join_labels(&e.labels),
            e.n_ports,
            states,
            e.t_rms
        );
    }
    if result.ranked.iter().any(|e| e.reduced) {
        let _ = writeln!(out, "* layout on a symmetry element: fewer states, ranked after full layouts");
    }
    let _ = writeln!(out, "group {}, {} frequencies", s.group.name, result.ka.len());
    out
}

fn emit_scan(s: &Scenario, prefix: &str, result: &ScanResult) -> Result<(), CliError> {
    let summary = format!("{prefix}_summary.csv");
    let trace = format!("{prefix}_trace.csv");
    write(&s.out, &summary, &scan_summary(result, &s.group))?;
    write(&s.out, &trace, &scan_trace(result, &s.group))?;
    write(&s.out, &format!("{prefix}_kappa.csv"), &kappa_table(result, &s.group))?;
    fs::write(s.out.join(format!("{prefix}.gp")), gnuplot_script(&summary, &trace))?;
    let text = report(s, result, 20);
    fs::write(s.out.join(format!("{prefix}_report.txt")), &text)?;
    print!("{text}");
    Ok(())
}

pub fn scan(s: &Scenario) -> Result<(), CliError> {
    let grid = s.grid()?;
    if grid.len() != 1 {
        return Err(
            s.frequency_error(format!("scan needs exactly one frequency, got {}; use sweep for a band", grid.len()))
        );
    }
    let result = run_scan(ctx(s), &spec(s, grid.clone(), s.n_xi)?)?;
    emit_scan(s, "scan", &result)
}

pub fn sweep(s: &Scenario) -> Result<(), CliError> {
    let grid = s.grid()?;
    let result = run_scan(ctx(s), &spec(s, grid.clone(), s.n_xi)?)?;
    emit_scan(s, "sweep", &result)?;
    write(&s.out, "sweep_per_frequency.csv", &per_frequency_table(&per_frequency_best(&result)))?;
    let mut curves = Table::new(["rank", "positions", "ka", "t_rms"]);
    for (r, e) in result.ranked.iter().enumerate() {
        for (f, &ka) in result.ka.iter().enumerate() {
            curves.push(vec![(r + 1).to_string(), join_labels(&e.labels), fmt_num(ka), fmt_num(e.t_rms_at(f))]);
        }
    }
    write(&s.out, "sweep_curves.csv", &curves)
}

pub fn compare(s: &Scenario) -> Result<(), CliError> {
    let grid = s.grid()?;
    let reference = s
        .reference
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("{}: compare needs a [reference] section", s.source.display())))?;
    let mut table = Table::new(["layout", "n_xi", "positions", "n_ports", "n_states", "t_rms", "pattern_t_rms"]);
    let mut text = String::new();
    for n in 1..=s.n_xi {
        let result = run_scan(ctx(s), &spec(s, grid.clone(), n)?)?;
        let b = result.best();
        table.push(vec![
            format!("Best {n}"),
            n.to_string(),
            join_labels(&b.labels),
            b.n_ports.to_string(),
            b.species.len().to_string(),
            fmt_num(b.t_rms),
            String::new(),
        ]);
        let _ = writeln!(
            text,
            "Best {n:<3} {{{}}}  N_p = {:>2}  t_RMS = {:.4}",
            join_labels(&b.labels),
            b.n_ports,
            b.t_rms
        );
    }
    let r = reference_comparison(ctx(s), &spec(s, grid.clone(), reference.positions.len())?, reference)?;
    let labels: Vec<usize> = reference.positions.iter().map(|c| c.label).collect();
    table.push(vec![
        "Reference".into(),
        labels.len().to_string(),
        join_labels(&labels),
        r.entry.n_ports.to_string(),
        r.entry.species.len().to_string(),
        fmt_num(r.entry.t_rms),
        r.pattern_t_rms.map_or(String::new(), fmt_num),
    ]);
    let _ = writeln!(
        text,
        "Reference {{{}}}  N_p = {:>2}  t_RMS = {:.4}",
        join_labels(&labels),
        r.entry.n_ports,
        r.entry.t_rms
    );
    if let Some(p) = r.pattern_t_rms {
        let _ = writeln!(text, "Reference with given voltages: t_RMS = {p:.4}");
    }
    write(&s.out, "compare.csv", &table)?;
    fs::write(s.out.join("compare_report.txt"), &text)?;
    print!("{text}");
    Ok(())
}
