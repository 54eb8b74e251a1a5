//! Minimal PLY vertex reader written against the format description, used to
//! cross-check the library writer.

use nalgebra::Vector3;

pub fn read_vertices(bytes: &[u8]) -> Result<Vec<Vector3<f64>>, String> {
    let marker = b"end_header\n";
    let start = bytes
        .windows(marker.len())
        .position(|w| w == marker)
        .ok_or("no end_header")?
        + marker.len();
    let header = std::str::from_utf8(&bytes[..start]).map_err(|e| e.to_string())?;
    let mut binary = None;
    let mut count = None;
    let mut props = Vec::new();
    let mut in_vertex = false;
    for line in header.lines() {
        let t: Vec<&str> = line.split(' ').collect();
        match t[0] {
            "format" => binary = Some(t[1] == "binary_little_endian"),
            "element" => {
                in_vertex = t[1] == "vertex";
                if in_vertex {
                    count = Some(t[2].parse::<usize>().map_err(|e| e.to_string())?);
                }
            }
            "property" if in_vertex => {
                if t[1] != "double" {
                    return Err(format!("unexpected property type {}", t[1]));
                }
                props.push(t[2].to_string());
            }
            _ => {}
        }
    }
    if props != ["x", "y", "z"] {
        return Err(format!("unexpected properties {props:?}"));
    }
    let n = count.ok_or("no vertex element")?;
    let body = &bytes[start..];
    if binary.ok_or("no format")? {
        if body.len() != n * 24 {
            return Err(format!("body has {} bytes, expected {}", body.len(), n * 24));
        }
        Ok(body
            .chunks_exact(24)
            .map(|c| {
                let f = |k: usize| f64::from_le_bytes(c[8 * k..8 * k + 8].try_into().unwrap());
                Vector3::new(f(0), f(1), f(2))
            })
            .collect())
    } else {
        let text = std::str::from_utf8(body).map_err(|e| e.to_string())?;
        let rows: Vec<&str> = text.lines().collect();
        if rows.len() != n {
            return Err(format!("{} rows, expected {n}", rows.len()));
        }
        rows.iter()
            .map(|r| {
                let v: Vec<f64> = r.split(' ').map(|x| x.parse::<f64>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
                Ok(Vector3::new(v[0], v[1], v[2]))
            })
            .collect()
    }
}
