//! Line-oriented environment snapshots.
//!
//! ```text
//! eucfpp-snapshot 1
//! dim 2
//! window -1 -1 1 1
//! box -1 -1 bits 0110 u 0.25 0.5 u 0.75 0.125
//! box -1 0 bits 01
//! ...
//! ```
//!
//! One `box` record per window box in row-major order (last axis fastest).
//! `bits` lists the Bernoulli prefix up to the count's stabilization depth
//! (later bits read as zero on import); each `u` group is the uniform
//! offset of one realized point from the box's lower corner. Floats use the
//! shortest representation that round-trips.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{BoxIndex, GridSpec, Window};
use crate::point_process::environment::Environment;
use crate::point_process::tape::BoxTape;

const MAGIC: &str = "eucfpp-snapshot 1";

pub fn export_snapshot(env: &Environment) -> String {
    let d = env.dim();
    let w = env.window();
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "dim {d}");
    let bounds: Vec<String> = w.lo.coords().iter().chain(w.hi.coords()).map(|c| c.to_string()).collect();
    let _ = writeln!(out, "window {}", bounds.join(" "));
    for b in w.boxes() {
        let tape = env.tape(&b).expect("window box");
        let coords: Vec<String> = b.coords().iter().map(|c| c.to_string()).collect();
        let bits: String = tape.bit_prefix().iter().map(|&x| if x { '1' } else { '0' }).collect();
        let _ = write!(out, "box {} bits {}", coords.join(" "), bits);
        for k in 0..tape.count() {
            let u = tape.uniform(k);
            let _ = write!(out, " u");
            for x in u.iter() {
                let _ = write!(out, " {x}");
            }
        }
        out.push('\n');
    }
    out
}

fn parse_ints(tokens: &[&str], line: usize) -> Result<Vec<i64>> {
    tokens
        .iter()
        .map(|t| t.parse::<i64>().map_err(|_| Error::Malformed(format!("line {line}: bad integer {t:?}"))))
        .collect()
}

pub fn import_snapshot(text: &str) -> Result<Environment> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, magic) = lines.next().ok_or_else(|| Error::Malformed("empty snapshot".into()))?;
    if magic.trim() != MAGIC {
        return Err(Error::Malformed(format!("line 1: expected {MAGIC:?}")));
    }
    let (ln, dim_line) = lines.next().ok_or_else(|| Error::Malformed("missing dim".into()))?;
    let dim: usize = dim_line
        .strip_prefix("dim ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::Malformed(format!("line {}: expected `dim <d>`", ln + 1)))?;
    let grid = GridSpec::new(dim)?;
    let (ln, win_line) = lines.next().ok_or_else(|| Error::Malformed("missing window".into()))?;
    let toks: Vec<&str> = win_line.split_whitespace().collect();
    if toks.first() != Some(&"window") || toks.len() != 1 + 2 * dim {
        return Err(Error::Malformed(format!("line {}: expected `window` with {} bounds", ln + 1, 2 * dim)));
    }
    let bounds = parse_ints(&toks[1..], ln + 1)?;
    let window = Window::new(BoxIndex::new(&bounds[..dim]), BoxIndex::new(&bounds[dim..]))?;

    let mut tapes: Vec<Option<BoxTape>> = vec![None; window.num_boxes()];
    for (ln, line) in lines {
        let ln = ln + 1;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 3 + dim || toks[0] != "box" || toks[1 + dim] != "bits" {
            return Err(Error::Malformed(format!("line {ln}: expected `box <coords> bits <prefix>`")));
        }
        let b = BoxIndex::new(&parse_ints(&toks[1..1 + dim], ln)?);
        let slot = window
            .linear_index(&b)
            .ok_or_else(|| Error::Malformed(format!("line {ln}: box {b} outside window")))?;
        let (bits_tok, rest) = if toks.len() > 2 + dim && toks[2 + dim] != "u" {
            (toks[2 + dim], &toks[3 + dim..])
        } else {
            ("", &toks[2 + dim..])
        };
        let bits = bits_tok
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Malformed(format!("line {ln}: bad bit {c:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if rest.len() % (dim + 1) != 0 {
            return Err(Error::Malformed(format!("line {ln}: uniform groups must have {dim} values")));
        }
        let mut uniforms = Vec::new();
        for group in rest.chunks(dim + 1) {
            if group[0] != "u" {
                return Err(Error::Malformed(format!("line {ln}: expected `u`")));
            }
            let u = group[1..]
                .iter()
                .map(|t| t.parse::<f64>().map_err(|_| Error::Malformed(format!("line {ln}: bad float {t:?}"))))
                .collect::<Result<Vec<_>>>()?;
            uniforms.push(u);
        }
        let listed = uniforms.len();
        let tape = BoxTape::explicit(dim, bits, uniforms)
            .map_err(|e| Error::Malformed(format!("line {ln}: {e}")))?;
        if tape.count() != listed {
            return Err(Error::Malformed(format!(
                "line {ln}: bits decode to {} points but {listed} are listed",
                tape.count()
            )));
        }
        if tapes[slot].replace(tape).is_some() {
            return Err(Error::Malformed(format!("line {ln}: duplicate box {b}")));
        }
    }
    let tapes = tapes
        .into_iter()
        .enumerate()
        .map(|(i, t)| t.ok_or_else(|| Error::Malformed(format!("missing box {}", window.box_at(i)))))
        .collect::<Result<Vec<_>>>()?;
    Environment::from_tapes(grid, window, tapes)
}
