//! JSON and CSV file formats.
//!
//! Floats are written with 17 significant digits, so every value read back
//! is bit-identical to the one written.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::barrier_sim::Barrier;
use crate::closed_set::Component;
use crate::coupling::{Coupling, Entry, LiftedCoupling, Slice};
use crate::error::{Error, Result};

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    from_json(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_string(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(fail)?;
    for r in rows {
        w.write_record(&r).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// `x,y,mass`
pub fn coupling_csv(c: &Coupling) -> Result<String> {
    csv_string(&["x", "y", "mass"], c.entries().iter().map(|e| vec![num(e.x), num(e.y), num(e.mass)]))
}

/// `u0,u1,x,y,mass`
pub fn lifted_csv(lc: &LiftedCoupling) -> Result<String> {
    csv_string(
        &["u0", "u1", "x", "y", "mass"],
        lc.slices().iter().flat_map(|s| {
            s.coupling.entries().iter().map(move |e| vec![num(s.u0), num(s.u1), num(e.x), num(e.y), num(e.mass)])
        }),
    )
}

/// `u,component_type,a,b`, one row per component of each section. Rays
/// carry an infinite endpoint; a point has `a == b`.
pub fn barrier_csv(b: &Barrier) -> Result<String> {
    let rows = b.grid().iter().zip(b.sections()).flat_map(|(&u, s)| {
        s.components().into_iter().map(move |c| {
            let (kind, a, b) = match c {
                Component::Point(x) => ("point", x, x),
                Component::Interval(a, b) => ("interval", a, b),
                Component::LeftRay(b) => ("left_ray", f64::NEG_INFINITY, b),
                Component::RightRay(a) => ("right_ray", a, f64::INFINITY),
                Component::Line => ("line", f64::NEG_INFINITY, f64::INFINITY),
            };
            vec![num(u), kind.to_string(), num(a), num(b)]
        })
    });
    csv_string(&["u", "component_type", "a", "b"], rows)
}

fn records(text: &str, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let found = r.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    if found.iter().map(str::trim).ne(header.iter().copied()) {
        return Err(Error::Parse(format!("expected CSV header {}", header.join(","))));
    }
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            rec.iter().map(|f| f.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{f:?}: {e}")))).collect()
        })
        .collect()
}

pub fn parse_coupling_csv(text: &str) -> Result<Coupling> {
    Coupling::new(records(text, &["x", "y", "mass"])?.into_iter().map(|r| (r[0], r[1], r[2])))
}

/// Reads `u0,u1,x,y,mass` rows; rows sharing `(u0, u1)` form one slice.
pub fn parse_lifted_csv(text: &str) -> Result<LiftedCoupling> {
    let mut groups: BTreeMap<(u64, u64), (f64, f64, Vec<Entry>)> = BTreeMap::new();
    for r in records(text, &["u0", "u1", "x", "y", "mass"])? {
        if r[4] < 0.0 || !r.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidAtom(format!("bad row {r:?}")));
        }
        // Nonnegative floats order like their bit patterns.
        let key = (r[0].to_bits(), r[1].to_bits());
        let g = groups.entry(key).or_insert((r[0], r[1], Vec::new()));
        g.2.push(Entry { x: r[2], y: r[3], mass: r[4] });
    }
    let slices = groups
        .into_values()
        .map(|(u0, u1, entries)| Slice { u0, u1, coupling: Coupling::from_entries(entries) })
        .collect();
    LiftedCoupling::new(slices)
}
