use std::collections::BTreeSet;
use std::fmt::Write as _;

use qplace_core::fpga::{CellType, FpgaArchitecture, Netlist};

use crate::files::{CliError, Placement};

const CELL: usize = 20;

fn fill(ty: CellType) -> &'static str {
    match ty {
        CellType::IO => "#f2d492",
        CellType::BRAM => "#9cc3e6",
        CellType::LUT => "#ececec",
    }
}

fn center(row: usize, col: usize) -> (usize, usize) {
    (col * CELL + CELL / 2, row * CELL + CELL / 2)
}

/// Grid colored by cell type, one line per connected block pair and one
/// circle per placed block. Output depends only on the inputs.
pub fn render_svg(
    arch: &FpgaArchitecture,
    netlist: Option<&Netlist>,
    placement: &Placement,
) -> Result<String, CliError> {
    for (id, pin) in placement {
        if arch.location(pin.row, pin.col).is_none() {
            return Err(CliError::Validation(format!(
                "block `{id}` placed at ({}, {}) outside the grid",
                pin.row, pin.col
            )));
        }
    }
    let (w, h) = (arch.width() * CELL, arch.height() * CELL);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    s.push_str("<g class=\"grid\" stroke=\"#bbbbbb\" stroke-width=\"1\">\n");
    for loc in 0..arch.n() {
        let (r, c) = arch.coords(loc);
        let ty = arch.cell(loc);
        let _ = writeln!(
            s,
            r#"<rect class="cell {}" x="{}" y="{}" width="{CELL}" height="{CELL}" fill="{}"/>"#,
            ty.as_str().to_ascii_lowercase(),
            c * CELL,
            r * CELL,
            fill(ty)
        );
    }
    s.push_str("</g>\n");

    if let Some(netlist) = netlist {
        let mut pairs = BTreeSet::new();
        for (k, net) in netlist.nets().iter().enumerate() {
            for id in net {
                if !placement.contains_key(id) {
                    return Err(CliError::Validation(format!(
                        "nets[{k}] references unplaced block `{id}`"
                    )));
                }
            }
            let ids: BTreeSet<&String> = net.iter().collect();
            let ids: Vec<&String> = ids.into_iter().collect();
            for (x, a) in ids.iter().enumerate() {
                for b in &ids[x + 1..] {
                    pairs.insert((*a, *b));
                }
            }
        }
        s.push_str("<g class=\"nets\" stroke=\"#c0392b\" stroke-width=\"1.5\" stroke-opacity=\"0.7\">\n");
        for (a, b) in pairs {
            let (x1, y1) = center(placement[a].row, placement[a].col);
            let (x2, y2) = center(placement[b].row, placement[b].col);
            let _ = writeln!(s, r#"<line class="edge" x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}"/>"#);
        }
        s.push_str("</g>\n");
    }

    s.push_str("<g class=\"blocks\" fill=\"#2c3e50\">\n");
    for (id, pin) in placement {
        let (cx, cy) = center(pin.row, pin.col);
        let _ = writeln!(
            s,
            r#"<circle class="block" cx="{cx}" cy="{cy}" r="{}"><title>{}</title></circle>"#,
            CELL / 4,
            escape(id)
        );
    }
    s.push_str("</g>\n</svg>\n");
    Ok(s)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
