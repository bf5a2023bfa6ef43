//! Grid-map file formats: a self-describing text layout and a compact
//! binary layout, both carrying `{nx, ny, pitch_m, unit}` in the header.

use super::{GridMap, MapUnit, SurfaceError};
use std::io::{Read, Write};
use std::path::Path;

const BINARY_MAGIC: &[u8; 4] = b"CGM1";

pub fn write_text<W: Write>(grid: &GridMap, mut w: W) -> Result<(), SurfaceError> {
    let io = |e: std::io::Error| SurfaceError::Io(e.to_string());
    writeln!(w, "# casimir grid map").map_err(io)?;
    writeln!(w, "nx {}", grid.nx()).map_err(io)?;
    writeln!(w, "ny {}", grid.ny()).map_err(io)?;
    writeln!(w, "pitch_m {:e}", grid.pitch()).map_err(io)?;
    writeln!(
        w,
        "unit {}",
        match grid.unit {
            MapUnit::Meters => "m",
            MapUnit::Volts => "V",
        }
    )
    .map_err(io)?;
    for iy in 0..grid.ny() {
        let row: Vec<String> = (0..grid.nx())
            .map(|ix| format!("{:e}", grid.at(ix, iy)))
            .collect();
        writeln!(w, "{}", row.join(" ")).map_err(io)?;
    }
    Ok(())
}

pub fn write_binary<W: Write>(grid: &GridMap, mut w: W) -> Result<(), SurfaceError> {
    let io = |e: std::io::Error| SurfaceError::Io(e.to_string());
    w.write_all(BINARY_MAGIC).map_err(io)?;
    w.write_all(&(grid.nx() as u32).to_le_bytes()).map_err(io)?;
    w.write_all(&(grid.ny() as u32).to_le_bytes()).map_err(io)?;
    w.write_all(&grid.pitch().to_le_bytes()).map_err(io)?;
    w.write_all(&[match grid.unit {
        MapUnit::Meters => 0u8,
        MapUnit::Volts => 1u8,
    }])
    .map_err(io)?;
    for v in grid.data() {
        w.write_all(&v.to_le_bytes()).map_err(io)?;
    }
    Ok(())
}

/// Read either format, sniffing the binary magic.
pub fn read_map<R: Read>(mut r: R) -> Result<GridMap, SurfaceError> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)
        .map_err(|e| SurfaceError::Io(e.to_string()))?;
    if buf.starts_with(BINARY_MAGIC) {
        read_binary(&buf)
    } else {
        read_text(std::str::from_utf8(&buf).map_err(|e| SurfaceError::Io(e.to_string()))?)
    }
}

pub fn read_map_path(path: &Path) -> Result<GridMap, SurfaceError> {
    let f = std::fs::File::open(path)
        .map_err(|e| SurfaceError::Io(format!("{}: {e}", path.display())))?;
    read_map(std::io::BufReader::new(f))
}

pub fn write_map_path(grid: &GridMap, path: &Path) -> Result<(), SurfaceError> {
    let f = std::fs::File::create(path)
        .map_err(|e| SurfaceError::Io(format!("{}: {e}", path.display())))?;
    write_text(grid, std::io::BufWriter::new(f))
}

fn read_binary(buf: &[u8]) -> Result<GridMap, SurfaceError> {
    let need = 4 + 4 + 4 + 8 + 1;
    if buf.len() < need {
        return Err(SurfaceError::Io("truncated binary map header".into()));
    }
    let nx = u32::from_le_bytes(buf[4..8].try_into().unwrap()) as usize;
    let ny = u32::from_le_bytes(buf[8..12].try_into().unwrap()) as usize;
    let pitch = f64::from_le_bytes(buf[12..20].try_into().unwrap());
    let unit = match buf[20] {
        0 => MapUnit::Meters,
        1 => MapUnit::Volts,
        u => return Err(SurfaceError::Io(format!("unknown unit tag {u}"))),
    };
    let expected = need + nx * ny * 8;
    if buf.len() != expected {
        return Err(SurfaceError::Io(format!(
            "binary map payload is {} bytes, expected {}",
            buf.len() - need,
            nx * ny * 8
        )));
    }
    let data: Vec<f64> = buf[need..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    GridMap::new(nx, ny, pitch, data, unit)
}

fn read_text(text: &str) -> Result<GridMap, SurfaceError> {
    let mut nx = None;
    let mut ny = None;
    let mut pitch = None;
    let mut unit = None;
    let mut data = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: String| SurfaceError::Io(format!("line {}: {msg}", lineno + 1));
        let mut fields = line.split_whitespace();
        let first = fields.next().unwrap();
        match first {
            "nx" => {
                nx = Some(
                    fields
                        .next()
                        .ok_or_else(|| bad("missing nx".into()))?
                        .parse::<usize>()
                        .map_err(|e| bad(e.to_string()))?,
                )
            }
            "ny" => {
                ny = Some(
                    fields
                        .next()
                        .ok_or_else(|| bad("missing ny".into()))?
                        .parse::<usize>()
                        .map_err(|e| bad(e.to_string()))?,
                )
            }
            "pitch_m" => {
                pitch = Some(
                    fields
                        .next()
                        .ok_or_else(|| bad("missing pitch_m".into()))?
                        .parse::<f64>()
                        .map_err(|e| bad(e.to_string()))?,
                )
            }
            "unit" => {
                unit = Some(match fields.next() {
                    Some("m") => MapUnit::Meters,
                    Some("V") => MapUnit::Volts,
                    other => return Err(bad(format!("unknown unit {other:?}"))),
                })
            }
            _ => {
                data.push(first.parse::<f64>().map_err(|e| bad(e.to_string()))?);
                for v in fields {
                    data.push(v.parse::<f64>().map_err(|e| bad(e.to_string()))?);
                }
            }
        }
    }
    GridMap::new(
        nx.ok_or_else(|| SurfaceError::Io("missing nx".into()))?,
        ny.ok_or_else(|| SurfaceError::Io("missing ny".into()))?,
        pitch.ok_or_else(|| SurfaceError::Io("missing pitch_m".into()))?,
        data,
        unit.ok_or_else(|| SurfaceError::Io("missing unit".into()))?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> GridMap {
        GridMap::new(
            3,
            2,
            0.25e-6,
            vec![1.0e-9, -2.0e-9, 3.0e-9, 0.5e-9, 0.0, -1.5e-9],
            MapUnit::Meters,
        )
        .unwrap()
    }

    #[test]
    fn text_round_trip() {
        let g = sample();
        let mut buf = Vec::new();
        write_text(&g, &mut buf).unwrap();
        let back = read_map(buf.as_slice()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn binary_round_trip() {
        let g = sample();
        let mut buf = Vec::new();
        write_binary(&g, &mut buf).unwrap();
        let back = read_map(buf.as_slice()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn malformed_header_reports_line() {
        let err = read_map("nx 2\nny x\n".as_bytes()).unwrap_err();
        assert!(matches!(err, SurfaceError::Io(msg) if msg.contains("line 2")));
    }
}
