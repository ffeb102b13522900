use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::process::ExitCode;

use qplace_core::fpga::{build_distance_matrix, build_flow_matrix, CellType, FpgaArchitecture, Netlist, Pin};
use qplace_core::qap::{qap_cost, SubPermutation};
use qplace_core::Error;

/// Block id to grid cell.
pub type Placement = BTreeMap<String, Pin>;

#[derive(Debug)]
pub enum CliError {
    /// Bad input, illegal placement or infeasible instance (exit 1).
    Validation(String),
    /// Solver or I/O failure (exit 2).
    Infra(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Validation(_) => ExitCode::from(1),
            CliError::Infra(_) => ExitCode::from(2),
        }
    }

    pub fn from_core(e: Error) -> Self {
        match e {
            Error::ExternalFailure { .. }
            | Error::ExternalTimeout { .. }
            | Error::ExternalMalformed(_)
            | Error::ObjectiveMismatch { .. }
            | Error::ExhaustiveTooLarge { .. }
            | Error::Io(_) => CliError::Infra(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }

    fn input(path: &Path, e: impl fmt::Display) -> Self {
        CliError::Validation(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Infra(m) => f.write_str(m),
        }
    }
}

/// `fictional`, `fictional:<side>` or a path to an architecture document.
pub fn load_arch(arg: &str) -> Result<FpgaArchitecture, CliError> {
    if arg == "fictional" {
        return Ok(FpgaArchitecture::fictional());
    }
    if let Some(side) = arg.strip_prefix("fictional:") {
        let side: usize = side
            .parse()
            .map_err(|_| CliError::Validation(format!("bad grid size in `{arg}`")))?;
        if side < 3 {
            return Err(CliError::Validation("fictional grids need side >= 3".into()));
        }
        return Ok(FpgaArchitecture::fictional_sized(side));
    }
    let path = Path::new(arg);
    let text = fs::read_to_string(path).map_err(|e| CliError::input(path, e))?;
    FpgaArchitecture::from_json_str(&text).map_err(|e| CliError::input(path, e))
}

pub fn load_netlist(path: &Path) -> Result<Netlist, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::input(path, e))?;
    Netlist::from_json_str(&text).map_err(|e| CliError::input(path, e))
}

pub fn load_placement(path: &Path) -> Result<Placement, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::input(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(path, e))
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Infra(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::Infra(format!("{}: {e}", path.display())))
}

pub fn placement_json(p: &Placement) -> String {
    serde_json::to_string_pretty(p).expect("placement serializes") + "\n"
}

pub fn to_placement(netlist: &Netlist, arch: &FpgaArchitecture, p: &SubPermutation) -> Placement {
    netlist
        .blocks()
        .iter()
        .zip(p.assignment())
        .map(|(b, &loc)| {
            let (row, col) = arch.coords(loc);
            (b.id.clone(), Pin { row, col })
        })
        .collect()
}

/// Converts a placement document into a sub-permutation; fails unless every
/// block has a distinct in-range cell.
pub fn to_sub_permutation(
    netlist: &Netlist,
    arch: &FpgaArchitecture,
    placement: &Placement,
) -> Result<SubPermutation, CliError> {
    let assign = netlist
        .blocks()
        .iter()
        .map(|b| {
            let pin = placement
                .get(&b.id)
                .ok_or_else(|| CliError::Validation(format!("block `{}` is not placed", b.id)))?;
            arch.location(pin.row, pin.col).ok_or_else(|| {
                CliError::Validation(format!("block `{}` placed outside the grid", b.id))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    SubPermutation::new(assign, arch.n()).map_err(CliError::from_core)
}

pub struct Report {
    pub cost: f64,
    pub counts: String,
    pub violations: Vec<String>,
}

pub fn evaluate(arch: &FpgaArchitecture, netlist: &Netlist, placement: &Placement) -> Result<Report, CliError> {
    if let Some(id) = placement.keys().find(|id| netlist.block_index(id).is_none()) {
        return Err(CliError::Validation(format!(
            "placement names block `{id}` absent from the instance"
        )));
    }
    let mut violations = Vec::new();
    let mut locs = Vec::with_capacity(netlist.len());
    let mut occupant: BTreeMap<usize, &str> = BTreeMap::new();
    for b in netlist.blocks() {
        let Some(pin) = placement.get(&b.id) else {
            return Err(CliError::Validation(format!("block `{}` is not placed", b.id)));
        };
        let Some(loc) = arch.location(pin.row, pin.col) else {
            return Err(CliError::Validation(format!(
                "block `{}` placed at ({}, {}) outside the {}x{} grid",
                b.id,
                pin.row,
                pin.col,
                arch.width(),
                arch.height()
            )));
        };
        if let Some(other) = occupant.insert(loc, &b.id) {
            violations.push(format!(
                "injectivity: blocks `{other}` and `{}` share cell ({}, {})",
                b.id, pin.row, pin.col
            ));
        }
        let cell = arch.cell(loc);
        if cell != b.ty {
            violations.push(format!(
                "legality: {} block `{}` on {cell} cell ({}, {})",
                b.ty, b.id, pin.row, pin.col
            ));
        }
        if let Some(fixed) = netlist.pins().get(&b.id) {
            if fixed != pin {
                violations.push(format!(
                    "legality: block `{}` pinned to ({}, {}) but placed at ({}, {})",
                    b.id, fixed.row, fixed.col, pin.row, pin.col
                ));
            }
        }
        locs.push(loc);
    }

    let f = build_flow_matrix(netlist);
    let d = build_distance_matrix(arch);
    let cost = match SubPermutation::new(locs.clone(), arch.n()) {
        Ok(p) => qap_cost(&f, &d, &p).map_err(CliError::from_core)?,
        Err(_) => {
            let mut total = 0.0;
            for (i, &a) in locs.iter().enumerate() {
                for (j, &b) in locs.iter().enumerate() {
                    total += f.get(i, j) * d.get(a, b);
                }
            }
            total
        }
    };
    let counts = CellType::ALL
        .iter()
        .map(|&t| format!("{t}={}", netlist.count(t)))
        .collect::<Vec<_>>()
        .join(" ");
    Ok(Report {
        cost,
        counts,
        violations,
    })
}
