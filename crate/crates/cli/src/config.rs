//! Scenario files: TOML with the sections `[mesh]`, `[frequency]`, `[ports]`,
//! `[material]`, `[analysis]`, `[reference]` and `[output]`.
//!
//! Semantic errors point at the line of the offending key.

use std::fmt;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use orthoport::em::FrequencyGrid;
use orthoport::geometry::{
    build_edge_basis, build_mapping_matrices, default_tolerance, load_mesh, EdgeBasisSet, MappingMatrix, MeshFormat,
};
use orthoport::optimizer::{Candidate, ReferenceLayout, DEFAULT_BUDGET};
use orthoport::point_group::{build_group, PointGroup, Species};
use orthoport::ports::DEFAULT_Z0_LINE;
use orthoport::{CVector, C64};
use serde::Deserialize;
use toml::Spanned;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mesh: MeshSection,
    frequency: Option<Spanned<FrequencySection>>,
    #[serde(default)]
    ports: PortsSection,
    #[serde(default)]
    material: MaterialSection,
    #[serde(default)]
    analysis: AnalysisSection,
    reference: Option<ReferenceSection>,
    #[serde(default)]
    output: OutputSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshSection {
    path: Spanned<String>,
    format: Option<Spanned<String>>,
    group: Spanned<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrequencySection {
    ka: Option<Vec<f64>>,
    start: Option<f64>,
    stop: Option<f64>,
    count: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PortsSection {
    candidates: Option<Spanned<Vec<usize>>>,
    positions: Option<Spanned<Vec<usize>>>,
    n_xi: Option<Spanned<usize>>,
    z0: Option<Spanned<f64>>,
    species: Option<Spanned<Vec<String>>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialSection {
    rho: Option<Spanned<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnalysisSection {
    operators: Option<Spanned<Vec<String>>>,
    budget: Option<Spanned<i64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReferenceSection {
    positions: Spanned<Vec<usize>>,
    voltages: Option<Spanned<Vec<Vec<f64>>>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    dir: Option<String>,
    #[serde(default)]
    dump_operators: bool,
}

/// Operators accepted in `analysis.operators`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorName {
    Identity,
    /// `Z0 + Rρ`.
    Z,
    Z0,
    R0,
    X0,
    W,
    Rrho,
    /// `Yᴴ R0 Y` with `Y = Z⁻¹`.
    YhR0Y,
    /// `Yᴴ W Y`.
    YhWY,
}

impl OperatorName {
    pub const DEFAULT: [OperatorName; 6] = [
        OperatorName::Identity,
        OperatorName::Z0,
        OperatorName::R0,
        OperatorName::X0,
        OperatorName::W,
        OperatorName::YhR0Y,
    ];

    pub fn parse(text: &str) -> Option<Self> {
        Some(match text.to_ascii_lowercase().as_str() {
            "identity" | "i" => OperatorName::Identity,
            "z" => OperatorName::Z,
            "z0" => OperatorName::Z0,
            "r0" => OperatorName::R0,
            "x0" => OperatorName::X0,
            "w" => OperatorName::W,
            "rrho" => OperatorName::Rrho,
            "yhr0y" => OperatorName::YhR0Y,
            "yhwy" => OperatorName::YhWY,
            _ => return None,
        })
    }
}

impl fmt::Display for OperatorName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OperatorName::Identity => "identity",
            OperatorName::Z => "Z",
            OperatorName::Z0 => "Z0",
            OperatorName::R0 => "R0",
            OperatorName::X0 => "X0",
            OperatorName::W => "W",
            OperatorName::Rrho => "Rrho",
            OperatorName::YhR0Y => "YhR0Y",
            OperatorName::YhWY => "YhWY",
        };
        f.write_str(s)
    }
}

/// A validated scenario with its mesh and symmetry data loaded.
#[derive(Debug)]
pub struct Scenario {
    pub source: PathBuf,
    pub basis: EdgeBasisSet,
    pub group: PointGroup,
    pub maps: Vec<MappingMatrix>,
    pub grid: Option<FrequencyGrid>,
    pub candidates: Vec<Candidate>,
    /// Positions to adapt; defaults to the candidates.
    pub positions: Vec<Candidate>,
    pub n_xi: usize,
    pub z0_line: f64,
    pub species: Option<Vec<Species>>,
    pub rho: f64,
    pub operators: Vec<OperatorName>,
    pub budget: u128,
    pub reference: Option<ReferenceLayout>,
    pub out: PathBuf,
    /// Write every analysed operator as a binary dump during `modes`.
    pub dump_operators: bool,
    /// Line of `[frequency]`, for errors raised by commands.
    frequency_line: Option<usize>,
    operators_line: Option<usize>,
}

impl Scenario {
    pub fn grid(&self) -> Result<&FrequencyGrid, CliError> {
        self.grid.as_ref().ok_or_else(|| {
            CliError::Config(format!("{}: this command needs a [frequency] section", self.source.display()))
        })
    }

    /// Config error pointing at the `[frequency]` section.
    pub fn frequency_error(&self, msg: impl fmt::Display) -> CliError {
        located(&self.source, self.frequency_line, msg)
    }

    pub fn operators_error(&self, msg: impl fmt::Display) -> CliError {
        located(&self.source, self.operators_line, msg)
    }
}

fn located(path: &Path, line: Option<usize>, msg: impl fmt::Display) -> CliError {
    match line {
        Some(l) => CliError::Config(format!("{}:{l}: {msg}", path.display())),
        None => CliError::Config(format!("{}: {msg}", path.display())),
    }
}

struct Ctx<'a> {
    path: &'a Path,
    text: &'a str,
}

impl Ctx<'_> {
    fn line(&self, span: Range<usize>) -> usize {
        self.text[..span.start.min(self.text.len())].matches('\n').count() + 1
    }

    fn err<T>(&self, at: &Spanned<T>, msg: impl fmt::Display) -> CliError {
        located(self.path, Some(self.line(at.span())), msg)
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub z0: Option<f64>,
}

pub fn load(path: &Path, overrides: &Overrides) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse(path, &text, overrides)
}

pub fn parse(path: &Path, text: &str, overrides: &Overrides) -> Result<Scenario, CliError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let ctx = Ctx { path, text };
    let base = path.parent().unwrap_or(Path::new("."));

    let mesh_path = base.join(raw.mesh.path.get_ref());
    let format = match &raw.mesh.format {
        Some(f) => MeshFormat::from_tag(f.get_ref()).map_err(|e| ctx.err(f, e))?,
        None => MeshFormat::from_path(&mesh_path).map_err(|e| ctx.err(&raw.mesh.path, e))?,
    };
    if !mesh_path.is_file() {
        return Err(ctx.err(&raw.mesh.path, format!("mesh file {} not found", mesh_path.display())));
    }
    let mesh = load_mesh(&mesh_path, format).map_err(|e| ctx.err(&raw.mesh.path, e))?;
    let basis = build_edge_basis(&mesh).map_err(|e| ctx.err(&raw.mesh.path, e))?;
    let group = build_group(raw.mesh.group.get_ref()).map_err(|e| ctx.err(&raw.mesh.group, e))?;
    let maps =
        build_mapping_matrices(&basis, &group, default_tolerance(&basis)).map_err(|e| ctx.err(&raw.mesh.group, e))?;

    let (grid, frequency_line) = match &raw.frequency {
        None => (None, None),
        Some(sp) => {
            let f = sp.get_ref();
            let grid = match (&f.ka, f.start, f.stop, f.count) {
                (Some(ka), None, None, None) => FrequencyGrid::new(ka.clone(), basis.radius()),
                (None, Some(a), Some(b), Some(n)) => FrequencyGrid::linspace(a, b, n, basis.radius()),
                _ => return Err(ctx.err(sp, "give either `ka = [...]` or all of `start`, `stop`, `count`")),
            }
            .map_err(|e| ctx.err(sp, e))?;
            (Some(grid), Some(ctx.line(sp.span())))
        }
    };

    let to_candidate = |label: usize, at: &Spanned<Vec<usize>>| -> Result<Candidate, CliError> {
        let index = basis.port_index(label).map_err(|e| ctx.err(at, e))?;
        Ok(Candidate { label, index })
    };
    let orbit = |idx: usize| -> Vec<usize> {
        let mut o: Vec<usize> = maps.iter().map(|m| m.columns[idx].0).collect();
        o.sort_unstable();
        o.dedup();
        o
    };
    let candidates = match &raw.ports.candidates {
        Some(c) => {
            if c.get_ref().is_empty() {
                return Err(ctx.err(c, "candidate list is empty"));
            }
            let list = c.get_ref().iter().map(|&l| to_candidate(l, c)).collect::<Result<Vec<_>, _>>()?;
            for (i, a) in list.iter().enumerate() {
                if let Some(b) = list[..i].iter().find(|b| orbit(b.index).contains(&a.index)) {
                    return Err(ctx.err(
                        c,
                        format!("candidates {} and {} are images of each other under the group", b.label, a.label),
                    ));
                }
            }
            list
        }
        // one labelled edge per orbit, the lowest label
        None => {
            let mut list: Vec<Candidate> = Vec::new();
            for l in basis.port_labels() {
                let index = basis.port_index(l).expect("labelled");
                if !list.iter().any(|b| orbit(b.index).contains(&index)) {
                    list.push(Candidate { label: l, index });
                }
            }
            list
        }
    };
    if candidates.is_empty() {
        return Err(ctx.err(&raw.mesh.path, "mesh defines no port edges and no candidates are given"));
    }
    let positions = match &raw.ports.positions {
        Some(p) => p.get_ref().iter().map(|&l| to_candidate(l, p)).collect::<Result<Vec<_>, _>>()?,
        None => candidates.clone(),
    };
    let n_xi = match &raw.ports.n_xi {
        Some(n) if *n.get_ref() == 0 || *n.get_ref() > candidates.len() => {
            return Err(ctx.err(n, format!("n_xi must lie in 1..={}", candidates.len())));
        }
        Some(n) => *n.get_ref(),
        None => 1,
    };
    let z0_line = match (&overrides.z0, &raw.ports.z0) {
        (Some(z), _) => *z,
        (None, Some(z)) => *z.get_ref(),
        (None, None) => DEFAULT_Z0_LINE,
    };
    if !(z0_line > 0.0 && z0_line.is_finite()) {
        let msg = format!("line impedance must be positive, got {z0_line}");
        return Err(match &raw.ports.z0 {
            Some(z) if overrides.z0.is_none() => ctx.err(z, msg),
            _ => CliError::Config(msg),
        });
    }
    let species = match &raw.ports.species {
        None => None,
        Some(s) => Some(
            s.get_ref()
                .iter()
                .map(|t| group.parse_species(t).map_err(|e| ctx.err(s, e)))
                .collect::<Result<Vec<_>, _>>()?,
        ),
    };
    let rho = match &raw.material.rho {
        Some(r) if !(*r.get_ref() >= 0.0) => {
            return Err(ctx.err(r, format!("resistivity must be nonnegative, got {}", r.get_ref())))
        }
        Some(r) => *r.get_ref(),
        None => 0.0,
    };
    let (operators, operators_line) = match &raw.analysis.operators {
        None => (OperatorName::DEFAULT.to_vec(), None),
        Some(ops) => {
            let parsed = ops
                .get_ref()
                .iter()
                .map(|o| OperatorName::parse(o).ok_or_else(|| ctx.err(ops, format!("unknown operator `{o}`"))))
                .collect::<Result<Vec<_>, _>>()?;
            if parsed.is_empty() {
                return Err(ctx.err(ops, "operator list is empty"));
            }
            (parsed, Some(ctx.line(ops.span())))
        }
    };
    let budget = match &raw.analysis.budget {
        Some(b) if *b.get_ref() <= 0 => return Err(ctx.err(b, "budget must be positive")),
        Some(b) => *b.get_ref() as u128,
        None => DEFAULT_BUDGET,
    };
    let reference = match &raw.reference {
        None => None,
        Some(r) => {
            if r.positions.get_ref().is_empty() {
                return Err(ctx.err(&r.positions, "reference layout is empty"));
            }
            let positions =
                r.positions.get_ref().iter().map(|&l| to_candidate(l, &r.positions)).collect::<Result<Vec<_>, _>>()?;
            let voltages = r.voltages.as_ref().map(|v| {
                v.get_ref()
                    .iter()
                    .map(|row| CVector::from_iterator(row.len(), row.iter().map(|&x| C64::new(x, 0.0))))
                    .collect()
            });
            Some(ReferenceLayout { positions, voltages })
        }
    };
    let out = match (&overrides.out, &raw.output.dir) {
        (Some(o), _) => o.clone(),
        (None, Some(d)) => base.join(d),
        (None, None) => base.join("out"),
    };
    let dump_operators = raw.output.dump_operators;

    Ok(Scenario {
        source: path.to_path_buf(),
        basis,
        group,
        maps,
        grid,
        candidates,
        positions,
        n_xi,
        z0_line,
        species,
        rho,
        operators,
        budget,
        reference,
        out,
        dump_operators,
        frequency_line,
        operators_line,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star_config(extra: &str) -> String {
        let mesh = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/star.msh");
        format!("[mesh]\npath = \"{mesh}\"\ngroup = \"C2v\"\n{extra}")
    }

    fn parse_str(text: &str) -> Result<Scenario, CliError> {
        parse(Path::new("scenario.toml"), text, &Overrides::default())
    }

    #[test]
    fn minimal_star_config() {
        let s = parse_str(&star_config("")).unwrap();
        assert_eq!(s.basis.len(), 5);
        // edges 1, 2, 4, 5 form one orbit, the centre edge 3 another
        assert_eq!(s.candidates.iter().map(|c| c.label).collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(s.positions.len(), 2);
        assert!(s.grid.is_none());
        assert_eq!(s.z0_line, 50.0);
        assert_eq!(s.operators, OperatorName::DEFAULT.to_vec());
    }

    #[test]
    fn semantic_errors_carry_the_line() {
        let err = parse_str(&star_config("[ports]\nn_xi = 1\ncandidates = [1, 99]\n")).unwrap_err();
        assert!(err.to_string().starts_with("scenario.toml:6:"), "{err}");
        let err = parse_str(&star_config("[ports]\ncandidates = [1, 4]\n")).unwrap_err();
        assert!(err.to_string().starts_with("scenario.toml:5:") && err.to_string().contains("images"), "{err}");
        let err = parse_str(&star_config("[frequency]\nka = [2.0, 1.0]\n")).unwrap_err();
        assert!(err.to_string().starts_with("scenario.toml:4:"), "{err}");
        let text = star_config("").replace("C2v", "D3h");
        let err = parse_str(&text).unwrap_err();
        assert!(err.to_string().starts_with("scenario.toml:3:"), "{err}");
    }

    #[test]
    fn syntax_errors_mention_the_file() {
        let err = parse_str("[mesh\npath = 1").unwrap_err();
        assert!(err.to_string().contains("scenario.toml") && err.to_string().contains("line 1"), "{err}");
        let err = parse_str(&star_config("[ports]\nbogus = 1\n")).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn frequency_forms() {
        let s = parse_str(&star_config("[frequency]\nstart = 0.5\nstop = 1.0\ncount = 6\n")).unwrap();
        assert_eq!(s.grid.unwrap().ka.len(), 6);
        assert!(parse_str(&star_config("[frequency]\nstart = 0.5\n")).is_err());
    }

    #[test]
    fn overrides_win() {
        let o = Overrides { out: Some("elsewhere".into()), z0: Some(75.0) };
        let s = parse(Path::new("a/scenario.toml"), &star_config("[ports]\nz0 = 50.0\n"), &o).unwrap();
        assert_eq!(s.z0_line, 75.0);
        assert_eq!(s.out, PathBuf::from("elsewhere"));
    }
}
