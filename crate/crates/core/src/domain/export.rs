//! CSV and plain-PGM writers for node data.

use std::io::{self, Write};

use super::{DiscreteDomain, GridFunction};

/// Column header `i,j[,k],x1,x2[,x3],value`.
pub fn csv_header(dim: usize) -> String {
    let idx = ["i", "j", "k"];
    let mut cols: Vec<String> = idx[..dim].iter().map(|s| s.to_string()).collect();
    cols.extend((1..=dim).map(|k| format!("x{k}")));
    cols.push("value".into());
    cols.join(",")
}

fn spell(v: f64) -> &'static str {
    if v.is_nan() {
        "nan"
    } else if v > 0.0 {
        "inf"
    } else {
        "-inf"
    }
}

fn fmt_value(v: f64) -> String {
    if v.is_finite() {
        format!("{v:e}")
    } else {
        spell(v).into()
    }
}

/// One row per node; non-finite values are spelled `inf` / `-inf` / `nan`.
pub fn write_node_csv<W: Write>(dom: &DiscreteDomain, values: &[f64], mut out: W) -> io::Result<()> {
    writeln!(out, "{}", csv_header(dom.dim()))?;
    for (n, &v) in values.iter().enumerate().take(dom.num_nodes()) {
        let idx = dom.node_multi_index(n);
        let x = dom.node_coords(n);
        let mut row: Vec<String> = idx[..dom.dim()].iter().map(|i| i.to_string()).collect();
        row.extend(x.iter().map(|c| format!("{c:e}")));
        row.push(fmt_value(v));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_csv<W: Write>(u: &GridFunction, out: W) -> io::Result<()> {
    write_node_csv(u.domain(), u.values(), out)
}

/// Plain (P2) PGM of a 2-D slice; for 3-D grids the slice is the middle
/// `x_3` layer. Finite values are mapped affinely onto `0..=65535`;
/// non-finite values are drawn at 65535.
pub fn write_pgm<W: Write>(dom: &DiscreteDomain, values: &[f64], mut out: W) -> io::Result<()> {
    let nd = dom.node_dims();
    let (w, h) = (nd[0], nd[1]);
    let layer = if dom.dim() == 3 { nd[2] / 2 } else { 0 };
    let at = |i: usize, j: usize| {
        let mut idx = vec![i, j];
        if dom.dim() == 3 {
            idx.push(layer);
        }
        values[dom.node_from_multi_index(&idx)]
    };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for j in 0..h {
        for i in 0..w {
            let v = at(i, j);
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    let span = hi - lo;
    writeln!(out, "P2\n{w} {h}\n65535")?;
    // top row of the image is the largest x2
    for j in (0..h).rev() {
        let row: Vec<String> = (0..w)
            .map(|i| {
                let v = at(i, j);
                let level = if !v.is_finite() {
                    65535
                } else if span > 0.0 {
                    (((v - lo) / span) * 65535.0).round() as u32
                } else {
                    0
                };
                level.to_string()
            })
            .collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}

/// JSON spelling of floats: finite values as numbers, the rest as the strings
/// `"inf"`, `"-inf"` and `"nan"`.
pub mod json_float {
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(super::spell(*v))
        }
    }

    pub fn vec<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            if x.is_finite() {
                seq.serialize_element(x)?;
            } else {
                seq.serialize_element(super::spell(*x))?;
            }
        }
        seq.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::FieldFamily;

    #[test]
    fn csv_layout() {
        let dom = DiscreteDomain::uniform(FieldFamily::euclidean(2).unwrap(), 2).unwrap();
        let u = GridFunction::from_interior(&dom, &[1.0]).unwrap();
        let mut buf = Vec::new();
        write_csv(&u, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "i,j,x1,x2,value");
        assert_eq!(lines.len(), 10);
        assert_eq!(lines[5], "1,1,5e-1,5e-1,1e0");
        assert_eq!(csv_header(3), "i,j,k,x1,x2,x3,value");
    }

    #[test]
    fn pgm_levels() {
        let dom = DiscreteDomain::uniform(FieldFamily::euclidean(2).unwrap(), 2).unwrap();
        let mut vals = vec![0.0; 9];
        vals[4] = 2.0;
        vals[8] = f64::INFINITY;
        let mut buf = Vec::new();
        write_pgm(&dom, &vals, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "P2");
        assert_eq!(lines[1], "3 3");
        assert_eq!(lines[3], "0 0 65535");
        assert_eq!(lines[4], "0 65535 0");
    }
}
