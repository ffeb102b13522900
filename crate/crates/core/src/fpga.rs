//! Typed FPGA grids, netlists and random benchmark instances.
//!
//! Locations are numbered row-major (`row * width + col`). Distances are
//! Manhattan distances between cells; a block may only sit on a cell of its
//! own type.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, NetlistError, Result};
use crate::qap::{DistanceMatrix, FlowMatrix, LegalityOracle, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CellType {
    IO,
    BRAM,
    LUT,
}

impl CellType {
    pub const ALL: [CellType; 3] = [CellType::IO, CellType::BRAM, CellType::LUT];

    pub fn as_str(self) -> &'static str {
        match self {
            CellType::IO => "IO",
            CellType::BRAM => "BRAM",
            CellType::LUT => "LUT",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for CellType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CellType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "IO" => Ok(CellType::IO),
            "BRAM" => Ok(CellType::BRAM),
            "LUT" => Ok(CellType::LUT),
            other => Err(other.to_string()),
        }
    }
}

fn is_register_type(ty: &str) -> bool {
    matches!(
        ty.to_ascii_uppercase().as_str(),
        "REG" | "REGISTER" | "FF" | "DFF" | "FLIPFLOP" | "FLIP_FLOP"
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FpgaArchitecture {
    width: usize,
    height: usize,
    cells: Vec<CellType>,
}

#[derive(Serialize, Deserialize)]
struct ArchitectureDoc {
    width: usize,
    height: usize,
    cells: Vec<Vec<CellType>>,
}

impl FpgaArchitecture {
    pub fn new(width: usize, height: usize, cells: Vec<CellType>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Architecture("width and height must be positive".into()));
        }
        if cells.len() != width * height {
            return Err(Error::Architecture(format!(
                "{} cells given for a {width}x{height} grid",
                cells.len()
            )));
        }
        Ok(Self { width, height, cells })
    }

    /// The 21x21 reference grid: IO border, 16 BRAM cells on the interior
    /// lattice `{4, 8, 12, 16}^2`, LUT elsewhere.
    pub fn fictional() -> Self {
        Self::fictional_sized(21)
    }

    /// Square grid in the style of [`fictional`](Self::fictional): IO border
    /// and BRAM wherever both coordinates are nonzero multiples of 4 inside
    /// the border.
    pub fn fictional_sized(side: usize) -> Self {
        let side = side.max(1);
        let bram = |p: usize| p > 0 && p + 1 < side && p % 4 == 0;
        let cells = (0..side * side)
            .map(|loc| {
                let (r, c) = (loc / side, loc % side);
                if r == 0 || c == 0 || r + 1 == side || c + 1 == side {
                    CellType::IO
                } else if bram(r) && bram(c) {
                    CellType::BRAM
                } else {
                    CellType::LUT
                }
            })
            .collect();
        Self {
            width: side,
            height: side,
            cells,
        }
    }

    /// A grid of one cell type.
    pub fn uniform(width: usize, height: usize, ty: CellType) -> Result<Self> {
        Self::new(width, height, vec![ty; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[CellType] {
        &self.cells
    }

    pub fn cell(&self, loc: usize) -> CellType {
        self.cells[loc]
    }

    pub fn location(&self, row: usize, col: usize) -> Option<usize> {
        (row < self.height && col < self.width).then_some(row * self.width + col)
    }

    pub fn coords(&self, loc: usize) -> (usize, usize) {
        (loc / self.width, loc % self.width)
    }

    pub fn count(&self, ty: CellType) -> usize {
        self.cells.iter().filter(|&&c| c == ty).count()
    }

    pub fn locations_of(&self, ty: CellType) -> Vec<usize> {
        (0..self.n()).filter(|&l| self.cells[l] == ty).collect()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::from_doc(serde_json::from_str(s)?)
    }

    pub fn read_json(r: impl Read) -> Result<Self> {
        Self::from_doc(serde_json::from_reader(r)?)
    }

    pub fn write_json(&self, mut w: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(&mut w, &self.to_doc())?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("architecture serializes")
    }

    fn from_doc(doc: ArchitectureDoc) -> Result<Self> {
        if doc.cells.len() != doc.height {
            return Err(Error::Architecture(format!(
                "cells has {} rows, height is {}",
                doc.cells.len(),
                doc.height
            )));
        }
        if let Some(r) = doc.cells.iter().position(|row| row.len() != doc.width) {
            return Err(Error::Architecture(format!(
                "cells[{r}] has {} entries, width is {}",
                doc.cells[r].len(),
                doc.width
            )));
        }
        Self::new(doc.width, doc.height, doc.cells.concat())
    }

    fn to_doc(&self) -> ArchitectureDoc {
        ArchitectureDoc {
            width: self.width,
            height: self.height,
            cells: self.cells.chunks(self.width).map(<[_]>::to_vec).collect(),
        }
    }
}

/// `D[a][b] = |row_a - row_b| + |col_a - col_b|`.
pub fn build_distance_matrix(arch: &FpgaArchitecture) -> DistanceMatrix {
    let coords: Vec<(usize, usize)> = (0..arch.n()).map(|l| arch.coords(l)).collect();
    let mat = Matrix::from_fn(arch.n(), arch.n(), |a, b| {
        let ((ra, ca), (rb, cb)) = (coords[a], coords[b]);
        (ra.abs_diff(rb) + ca.abs_diff(cb)) as f64
    });
    DistanceMatrix::new(mat).expect("Manhattan distances form a valid distance matrix")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub id: String,
    #[serde(rename = "type")]
    pub ty: CellType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pin {
    pub row: usize,
    pub col: usize,
}

#[derive(Deserialize)]
struct RawBlock {
    id: String,
    #[serde(rename = "type")]
    ty: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetlist {
    blocks: Vec<RawBlock>,
    #[serde(default)]
    nets: Vec<Vec<String>>,
    #[serde(default)]
    pins: BTreeMap<String, Pin>,
}

#[derive(Serialize)]
struct NetlistOut<'a> {
    blocks: &'a [Block],
    nets: &'a [Vec<String>],
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pins: &'a BTreeMap<String, Pin>,
}

/// Blocks, the nets connecting them and optional fixed positions. Block `i`
/// is facility `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Netlist {
    blocks: Vec<Block>,
    nets: Vec<Vec<String>>,
    pins: BTreeMap<String, Pin>,
    index: HashMap<String, usize>,
}

impl Netlist {
    pub fn new(
        blocks: Vec<Block>,
        nets: Vec<Vec<String>>,
        pins: BTreeMap<String, Pin>,
    ) -> Result<Self, NetlistError> {
        let mut index = HashMap::with_capacity(blocks.len());
        for (i, b) in blocks.iter().enumerate() {
            if index.insert(b.id.clone(), i).is_some() {
                return Err(NetlistError::DuplicateBlock(b.id.clone()));
            }
        }
        for (k, net) in nets.iter().enumerate() {
            if let Some(id) = net.iter().find(|id| !index.contains_key(*id)) {
                return Err(NetlistError::UnknownBlock {
                    net: k,
                    id: id.clone(),
                });
            }
            if net.iter().collect::<BTreeSet<_>>().len() < 2 {
                return Err(NetlistError::ShortNet { net: k });
            }
        }
        if let Some(id) = pins.keys().find(|id| !index.contains_key(*id)) {
            return Err(NetlistError::UnknownPinBlock(id.clone()));
        }
        Ok(Self {
            blocks,
            nets,
            pins,
            index,
        })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn nets(&self) -> &[Vec<String>] {
        &self.nets
    }

    pub fn pins(&self) -> &BTreeMap<String, Pin> {
        &self.pins
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn block_types(&self) -> Vec<CellType> {
        self.blocks.iter().map(|b| b.ty).collect()
    }

    pub fn count(&self, ty: CellType) -> usize {
        self.blocks.iter().filter(|b| b.ty == ty).count()
    }

    /// Nets as lists of block indices, duplicates within a net removed.
    pub fn net_indices(&self) -> Vec<Vec<usize>> {
        self.nets
            .iter()
            .map(|net| {
                let set: BTreeSet<usize> = net.iter().map(|id| self.index[id]).collect();
                set.into_iter().collect()
            })
            .collect()
    }

    /// Pin location per block, checked against `arch`.
    pub fn pin_locations(&self, arch: &FpgaArchitecture) -> Result<Vec<Option<usize>>, NetlistError> {
        let mut out = vec![None; self.blocks.len()];
        for (id, pin) in &self.pins {
            let i = self.index[id];
            let loc = arch
                .location(pin.row, pin.col)
                .ok_or_else(|| NetlistError::PinOutOfRange {
                    id: id.clone(),
                    row: pin.row,
                    col: pin.col,
                })?;
            if arch.cell(loc) != self.blocks[i].ty {
                return Err(NetlistError::PinIncompatible {
                    id: id.clone(),
                    row: pin.row,
                    col: pin.col,
                });
            }
            out[i] = Some(loc);
        }
        let mut seen = BTreeMap::new();
        for (i, loc) in out.iter().enumerate() {
            if let Some(loc) = loc {
                if let Some(prev) = seen.insert(*loc, i) {
                    return Err(NetlistError::PinCollision {
                        first: self.blocks[prev].id.clone(),
                        second: self.blocks[i].id.clone(),
                    });
                }
            }
        }
        Ok(out)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::from_raw(serde_json::from_str(s)?)
    }

    pub fn read_json(r: impl Read) -> Result<Self> {
        Self::from_raw(serde_json::from_reader(r)?)
    }

    pub fn write_json(&self, mut w: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(&mut w, &self.out())?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.out()).expect("netlist serializes")
    }

    fn out(&self) -> NetlistOut<'_> {
        NetlistOut {
            blocks: &self.blocks,
            nets: &self.nets,
            pins: &self.pins,
        }
    }

    fn from_raw(raw: RawNetlist) -> Result<Self> {
        let blocks = raw
            .blocks
            .into_iter()
            .map(|b| match b.ty.parse::<CellType>() {
                Ok(ty) => Ok(Block { id: b.id, ty }),
                Err(_) if is_register_type(&b.ty) => Err(NetlistError::RegisterBlock(b.id)),
                Err(ty) => Err(NetlistError::UnknownType { id: b.id, ty }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(blocks, raw.nets, raw.pins)?)
    }
}

/// `F[i][j] = 1` when blocks `i` and `j` share a net.
pub fn build_flow_matrix(netlist: &Netlist) -> FlowMatrix {
    let m = netlist.len();
    let mut mat = Matrix::zeros(m, m);
    for net in netlist.net_indices() {
        for (x, &i) in net.iter().enumerate() {
            for &j in &net[x + 1..] {
                mat[(i, j)] = 1.0;
                mat[(j, i)] = 1.0;
            }
        }
    }
    FlowMatrix::new(mat).expect("clique expansion yields a valid flow matrix")
}

/// Block type must match cell type; pinned blocks fit only their pin.
#[derive(Debug, Clone)]
pub struct TypeLegality {
    block_types: Vec<CellType>,
    cell_types: Vec<CellType>,
    pins: Vec<Option<usize>>,
}

impl TypeLegality {
    pub fn new(netlist: &Netlist, arch: &FpgaArchitecture) -> Result<Self> {
        Ok(Self {
            block_types: netlist.block_types(),
            cell_types: arch.cells().to_vec(),
            pins: netlist.pin_locations(arch)?,
        })
    }

    pub fn ignoring_pins(netlist: &Netlist, arch: &FpgaArchitecture) -> Self {
        Self {
            block_types: netlist.block_types(),
            cell_types: arch.cells().to_vec(),
            pins: vec![None; netlist.len()],
        }
    }

    pub fn pinned(&self) -> Vec<usize> {
        (0..self.pins.len()).filter(|&i| self.pins[i].is_some()).collect()
    }

    pub fn pin(&self, facility: usize) -> Option<usize> {
        self.pins[facility]
    }

    /// Fails with a capacity error when some type has more blocks than cells.
    pub fn check_capacity(&self) -> Result<()> {
        for ty in CellType::ALL {
            let blocks = self.block_types.iter().filter(|&&t| t == ty).count();
            let cells = self.cell_types.iter().filter(|&&t| t == ty).count();
            if blocks > cells {
                return Err(Error::Capacity(format!("{blocks} {ty} blocks but only {cells} {ty} cells")));
            }
        }
        Ok(())
    }
}

impl LegalityOracle for TypeLegality {
    fn is_legal(&self, facility: usize, location: usize) -> bool {
        match self.pins[facility] {
            Some(pin) => pin == location,
            None => self.block_types[facility] == self.cell_types[location],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    /// Target mean block degree; the spanning tree alone gives just under 2.
    pub mean_degree: f64,
    /// Pin the two IO blocks to random distinct IO cells.
    pub pin_io: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            mean_degree: 3.0,
            pin_io: false,
        }
    }
}

pub fn generate_instance<R: Rng + ?Sized>(arch: &FpgaArchitecture, m: usize, rng: &mut R) -> Result<Netlist> {
    generate_instance_with(arch, m, &GeneratorConfig::default(), rng)
}

/// Random instance: two IO blocks, the rest typed in proportion to the
/// non-IO cell counts, connected by a uniform random spanning tree plus extra
/// random edges up to the target mean degree. Every edge becomes a 2-pin net.
pub fn generate_instance_with<R: Rng + ?Sized>(
    arch: &FpgaArchitecture,
    m: usize,
    cfg: &GeneratorConfig,
    rng: &mut R,
) -> Result<Netlist> {
    if m < 3 {
        return Err(Error::InvalidConfig(format!("instances need at least 3 blocks, got {m}")));
    }
    if m > arch.n() {
        return Err(Error::Capacity(format!("{m} blocks exceed {} cells", arch.n())));
    }
    let io_cells = arch.count(CellType::IO);
    if io_cells < 2 {
        return Err(Error::Capacity(format!("2 IO blocks need 2 IO cells, found {io_cells}")));
    }
    let mut remaining: Vec<(CellType, usize)> = [CellType::BRAM, CellType::LUT]
        .into_iter()
        .map(|t| (t, arch.count(t)))
        .filter(|&(_, c)| c > 0)
        .collect();
    let capacity: usize = remaining.iter().map(|&(_, c)| c).sum();
    if m - 2 > capacity {
        return Err(Error::Capacity(format!(
            "{} non-IO blocks exceed {capacity} non-IO cells",
            m - 2
        )));
    }
    let weights: Vec<f64> = remaining.iter().map(|&(_, c)| c as f64).collect();

    let mut types = vec![CellType::IO, CellType::IO];
    for _ in 2..m {
        let total: f64 = remaining
            .iter()
            .zip(&weights)
            .filter(|((_, left), _)| *left > 0)
            .map(|(_, w)| w)
            .sum();
        let mut u = rng.gen::<f64>() * total;
        let mut pick = None;
        for (i, ((_, left), w)) in remaining.iter().zip(&weights).enumerate() {
            if *left == 0 {
                continue;
            }
            pick = Some(i);
            if u < *w {
                break;
            }
            u -= w;
        }
        let i = pick.expect("capacity checked above");
        types.push(remaining[i].0);
        remaining[i].1 -= 1;
    }

    let ids: Vec<String> = types
        .iter()
        .enumerate()
        .map(|(i, t)| format!("{}{i}", t.as_str().to_ascii_lowercase()))
        .collect();
    let blocks = ids
        .iter()
        .zip(&types)
        .map(|(id, &ty)| Block { id: id.clone(), ty })
        .collect();

    let mut edges = random_spanning_tree(m, rng);
    let mut present: BTreeSet<(usize, usize)> = edges.iter().copied().collect();
    let max_edges = m * (m - 1) / 2;
    let target = ((cfg.mean_degree * m as f64 / 2.0).round() as usize).clamp(m - 1, max_edges);
    while edges.len() < target {
        let a = rng.gen_range(0..m);
        let b = rng.gen_range(0..m);
        if a == b {
            continue;
        }
        let e = (a.min(b), a.max(b));
        if present.insert(e) {
            edges.push(e);
        }
    }
    let nets = edges
        .into_iter()
        .map(|(a, b)| vec![ids[a].clone(), ids[b].clone()])
        .collect();

    let mut pins = BTreeMap::new();
    if cfg.pin_io {
        let mut io = arch.locations_of(CellType::IO);
        io.shuffle(rng);
        for (k, &loc) in io.iter().take(2).enumerate() {
            let (row, col) = arch.coords(loc);
            pins.insert(ids[k].clone(), Pin { row, col });
        }
    }
    Ok(Netlist::new(blocks, nets, pins)?)
}

/// Uniform random labelled tree on `m >= 2` vertices via Prüfer decoding,
/// edges as `(min, max)`.
fn random_spanning_tree<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<(usize, usize)> {
    if m == 2 {
        return vec![(0, 1)];
    }
    let code: Vec<usize> = (0..m - 2).map(|_| rng.gen_range(0..m)).collect();
    let mut degree = vec![1usize; m];
    for &v in &code {
        degree[v] += 1;
    }
    let mut edges = Vec::with_capacity(m - 1);
    for &v in &code {
        let leaf = (0..m).find(|&u| degree[u] == 1).expect("a leaf always exists");
        edges.push((leaf.min(v), leaf.max(v)));
        degree[leaf] -= 1;
        degree[v] -= 1;
    }
    let last: Vec<usize> = (0..m).filter(|&u| degree[u] == 1).collect();
    edges.push((last[0], last[1]));
    edges
}
