//! Point cloud readers (PLY ascii and binary little endian, ASCII PCD,
//! whitespace XYZ) and a PLY writer.

use crate::error::{Error, Result};
use crate::geometry::{PointCloud, Vec3};
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    Auto,
    Ply,
    Pcd,
    Xyz,
}

impl FromStr for CloudFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(Self::Auto),
            "ply" => Ok(Self::Ply),
            "pcd" => Ok(Self::Pcd),
            "xyz" | "txt" => Ok(Self::Xyz),
            _ => Err(Error::InvalidParameter(format!("unknown cloud format '{s}'"))),
        }
    }
}

fn parse_err(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse { location: location.into(), message: message.into() }
}

fn finite(v: f64, location: impl FnOnce() -> String) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(parse_err(location(), format!("non-finite value {v}")))
    }
}

fn finish(points: Vec<Vec3>, normals: Option<Vec<Vec3>>, origin: &str) -> Result<PointCloud> {
    if points.is_empty() {
        return Err(parse_err(origin, "no points"));
    }
    match normals {
        Some(n) => PointCloud::with_normals(points, n).map_err(|e| parse_err(origin, e.to_string())),
        None => Ok(PointCloud::new(points)),
    }
}

/// Reads a cloud; `Auto` picks the format from the extension, falling back
/// to the file magic.
pub fn load_cloud(path: &Path, format: CloudFormat) -> Result<PointCloud> {
    let bytes = std::fs::read(path)?;
    let format = match format {
        CloudFormat::Auto => {
            let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
            match ext.as_str() {
                "ply" => CloudFormat::Ply,
                "pcd" => CloudFormat::Pcd,
                "xyz" | "txt" | "pts" => CloudFormat::Xyz,
                _ if bytes.starts_with(b"ply") => CloudFormat::Ply,
                _ => CloudFormat::Xyz,
            }
        }
        f => f,
    };
    match format {
        CloudFormat::Ply => parse_ply(&bytes),
        CloudFormat::Pcd => parse_pcd(&String::from_utf8_lossy(&bytes)),
        _ => parse_xyz(&String::from_utf8_lossy(&bytes)),
    }
}

/// Whitespace-separated rows of 3 (position) or 6 (plus normal) numbers.
/// Blank lines and `#` comments are skipped.
pub fn parse_xyz(text: &str) -> Result<PointCloud> {
    let mut points = Vec::new();
    let mut normals: Vec<Vec3> = Vec::new();
    let mut columns = None;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let loc = || format!("line {}", n + 1);
        let vals = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|_| parse_err(loc(), format!("bad number '{s}'"))).and_then(|v| finite(v, loc)))
            .collect::<Result<Vec<f64>>>()?;
        if vals.len() != 3 && vals.len() != 6 {
            return Err(parse_err(loc(), format!("expected 3 or 6 columns, got {}", vals.len())));
        }
        if *columns.get_or_insert(vals.len()) != vals.len() {
            return Err(parse_err(loc(), "column count changed"));
        }
        points.push(Vec3::new(vals[0], vals[1], vals[2]));
        if vals.len() == 6 {
            normals.push(Vec3::new(vals[3], vals[4], vals[5]));
        }
    }
    finish(points, (columns == Some(6)).then_some(normals), "xyz")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Self::I8 => b[0] as i8 as f64,
            Self::U8 => b[0] as f64,
            Self::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Self::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Self::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Self::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Self::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Self::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar(String, Scalar),
    List,
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

struct Fields {
    xyz: [usize; 3],
    normal: Option<[usize; 3]>,
}

fn vertex_fields(e: &Element) -> Result<Fields> {
    let find = |n: &str| e.props.iter().position(|p| matches!(p, Property::Scalar(name, _) if name == n));
    let need = |n: &str| find(n).ok_or_else(|| parse_err("header", format!("vertex property '{n}' missing")));
    let xyz = [need("x")?, need("y")?, need("z")?];
    let normal = match (find("nx"), find("ny"), find("nz")) {
        (Some(a), Some(b), Some(c)) => Some([a, b, c]),
        _ => None,
    };
    Ok(Fields { xyz, normal })
}

pub fn parse_ply(bytes: &[u8]) -> Result<PointCloud> {
    let mut pos = 0;
    let mut line_no = 0;
    let next_line = |pos: &mut usize, line_no: &mut usize| -> Option<String> {
        let rest = &bytes[*pos..];
        let end = rest.iter().position(|&b| b == b'\n')?;
        *pos += end + 1;
        *line_no += 1;
        Some(String::from_utf8_lossy(&rest[..end]).trim_end_matches('\r').to_string())
    };
    if next_line(&mut pos, &mut line_no).as_deref() != Some("ply") {
        return Err(parse_err("line 1", "missing 'ply' magic"));
    }
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let line = next_line(&mut pos, &mut line_no).ok_or_else(|| parse_err("header", "missing end_header"))?;
        let loc = format!("header line {line_no}");
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.first().copied() {
            Some("format") => format = tok.get(1).map(|s| s.to_string()),
            Some("element") => {
                let (Some(name), Some(count)) = (tok.get(1), tok.get(2).and_then(|c| c.parse().ok())) else {
                    return Err(parse_err(loc, "malformed element line"));
                };
                elements.push(Element { name: name.to_string(), count, props: Vec::new() });
            }
            Some("property") => {
                let e = elements.last_mut().ok_or_else(|| parse_err(loc.clone(), "property before element"))?;
                if tok.get(1) == Some(&"list") {
                    e.props.push(Property::List);
                } else {
                    let (Some(ty), Some(name)) = (tok.get(1).and_then(|t| Scalar::parse(t)), tok.get(2)) else {
                        return Err(parse_err(loc, format!("bad property '{line}'")));
                    };
                    e.props.push(Property::Scalar(name.to_string(), ty));
                }
            }
            Some("end_header") => break,
            Some("comment") | Some("obj_info") | None => {}
            Some(other) => return Err(parse_err(loc, format!("unknown header keyword '{other}'"))),
        }
    }
    let vi = elements.iter().position(|e| e.name == "vertex").ok_or_else(|| parse_err("header", "no vertex element"))?;
    let fields = vertex_fields(&elements[vi])?;
    let body = &bytes[pos..];
    let (points, normals) = match format.as_deref() {
        Some("ascii") => ply_ascii(body, &elements, vi, &fields, line_no)?,
        Some("binary_little_endian") => ply_binary(body, &elements, vi, &fields, pos)?,
        Some(f) => return Err(parse_err("header", format!("unsupported format '{f}'"))),
        None => return Err(parse_err("header", "missing format line")),
    };
    finish(points, normals, "ply")
}

type Columns = (Vec<Vec3>, Option<Vec<Vec3>>);

fn collect_row(vals: &[f64], f: &Fields, points: &mut Vec<Vec3>, normals: &mut Vec<Vec3>) {
    points.push(Vec3::new(vals[f.xyz[0]], vals[f.xyz[1]], vals[f.xyz[2]]));
    if let Some(n) = f.normal {
        normals.push(Vec3::new(vals[n[0]], vals[n[1]], vals[n[2]]));
    }
}

fn ply_ascii(body: &[u8], elements: &[Element], vi: usize, f: &Fields, header_lines: usize) -> Result<Columns> {
    let text = String::from_utf8_lossy(body);
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + header_lines + 1, l));
    let skip: usize = elements[..vi].iter().map(|e| e.count).sum();
    for _ in 0..skip {
        lines.next().ok_or_else(|| parse_err("body", "truncated before vertex data"))?;
    }
    let nprops = elements[vi].props.len();
    let (mut points, mut normals) = (Vec::with_capacity(elements[vi].count), Vec::new());
    for _ in 0..elements[vi].count {
        let (n, line) = lines.next().ok_or_else(|| parse_err("body", format!("expected {} vertices", elements[vi].count)))?;
        let loc = || format!("line {n}");
        let vals = line
            .split_whitespace()
            .map(|s| s.parse::<f64>().map_err(|_| parse_err(loc(), format!("bad number '{s}'"))).and_then(|v| finite(v, loc)))
            .collect::<Result<Vec<f64>>>()?;
        if vals.len() < nprops {
            return Err(parse_err(loc(), format!("expected {nprops} values, got {}", vals.len())));
        }
        collect_row(&vals, f, &mut points, &mut normals);
    }
    Ok((points, f.normal.map(|_| normals)))
}

fn ply_binary(body: &[u8], elements: &[Element], vi: usize, f: &Fields, base: usize) -> Result<Columns> {
    let mut off = 0;
    for e in &elements[..vi] {
        let mut size = 0;
        for p in &e.props {
            match p {
                Property::Scalar(_, s) => size += s.size(),
                Property::List => return Err(parse_err("header", format!("list element '{}' before vertices is not supported in binary", e.name))),
            }
        }
        off += size * e.count;
    }
    let types: Vec<Scalar> = elements[vi]
        .props
        .iter()
        .map(|p| match p {
            Property::Scalar(_, s) => Ok(*s),
            Property::List => Err(parse_err("header", "list property in vertex element")),
        })
        .collect::<Result<_>>()?;
    let stride: usize = types.iter().map(|t| t.size()).sum();
    let count = elements[vi].count;
    if body.len() < off + stride * count {
        return Err(parse_err(format!("byte {}", base + body.len()), format!("truncated: need {} vertex bytes", stride * count)));
    }
    let (mut points, mut normals) = (Vec::with_capacity(count), Vec::new());
    let mut vals = vec![0.0; types.len()];
    for _ in 0..count {
        let row = off;
        for (k, t) in types.iter().enumerate() {
            vals[k] = finite(t.read_le(&body[off..]), || format!("byte {}", base + row))?;
            off += t.size();
        }
        collect_row(&vals, f, &mut points, &mut normals);
    }
    Ok((points, f.normal.map(|_| normals)))
}

/// ASCII PCD with `x y z` and optional `normal_x normal_y normal_z` fields.
pub fn parse_pcd(text: &str) -> Result<PointCloud> {
    let mut fields: Vec<String> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    let mut points_hint = None;
    let mut lines = text.lines().enumerate();
    let mut data_ok = false;
    for (n, line) in lines.by_ref() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let loc = format!("line {}", n + 1);
        let mut tok = line.split_whitespace();
        match tok.next().unwrap_or("") {
            "FIELDS" => fields = tok.map(str::to_string).collect(),
            "COUNT" => counts = tok.map(|c| c.parse().map_err(|_| parse_err(loc.clone(), "bad COUNT"))).collect::<Result<_>>()?,
            "POINTS" => points_hint = tok.next().and_then(|p| p.parse::<usize>().ok()),
            "DATA" => {
                if tok.next() != Some("ascii") {
                    return Err(parse_err(loc, "only DATA ascii is supported"));
                }
                data_ok = true;
                break;
            }
            "VERSION" | "SIZE" | "TYPE" | "WIDTH" | "HEIGHT" | "VIEWPOINT" => {}
            other => return Err(parse_err(loc, format!("unknown header keyword '{other}'"))),
        }
    }
    if !data_ok {
        return Err(parse_err("header", "missing DATA line"));
    }
    if counts.is_empty() {
        counts = vec![1; fields.len()];
    }
    if counts.len() != fields.len() {
        return Err(parse_err("header", "COUNT and FIELDS lengths differ"));
    }
    let mut column = Vec::new();
    for (name, &c) in fields.iter().zip(&counts) {
        column.push((name.as_str(), c));
    }
    let col_of = |name: &str| {
        let mut at = 0;
        for &(n, c) in &column {
            if n == name {
                return Some(at);
            }
            at += c;
        }
        None
    };
    let width: usize = counts.iter().sum();
    let need = |n: &str| col_of(n).ok_or_else(|| parse_err("header", format!("field '{n}' missing")));
    let f = Fields {
        xyz: [need("x")?, need("y")?, need("z")?],
        normal: match (col_of("normal_x"), col_of("normal_y"), col_of("normal_z")) {
            (Some(a), Some(b), Some(c)) => Some([a, b, c]),
            _ => None,
        },
    };
    let (mut points, mut normals) = (Vec::with_capacity(points_hint.unwrap_or(0)), Vec::new());
    for (n, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let loc = || format!("line {}", n + 1);
        let vals = line
            .split_whitespace()
            .map(|s| s.parse::<f64>().map_err(|_| parse_err(loc(), format!("bad number '{s}'"))).and_then(|v| finite(v, loc)))
            .collect::<Result<Vec<f64>>>()?;
        if vals.len() != width {
            return Err(parse_err(loc(), format!("expected {width} values, got {}", vals.len())));
        }
        collect_row(&vals, &f, &mut points, &mut normals);
    }
    if let Some(p) = points_hint {
        if p != points.len() {
            return Err(parse_err("body", format!("POINTS says {p}, found {}", points.len())));
        }
    }
    finish(points, f.normal.map(|_| normals), "pcd")
}

/// PLY with double-precision coordinates (and normals when present).
pub fn write_ply<W: Write>(cloud: &PointCloud, mut w: W, binary: bool) -> Result<()> {
    writeln!(w, "ply")?;
    writeln!(w, "format {} 1.0", if binary { "binary_little_endian" } else { "ascii" })?;
    writeln!(w, "element vertex {}", cloud.len())?;
    for p in ["x", "y", "z"] {
        writeln!(w, "property double {p}")?;
    }
    if cloud.normals.is_some() {
        for p in ["nx", "ny", "nz"] {
            writeln!(w, "property double {p}")?;
        }
    }
    writeln!(w, "end_header")?;
    for (i, p) in cloud.points.iter().enumerate() {
        let mut row = vec![p.x, p.y, p.z];
        if let Some(n) = &cloud.normals {
            row.extend([n[i].x, n[i].y, n[i].z]);
        }
        if binary {
            for v in row {
                w.write_all(&v.to_le_bytes())?;
            }
        } else {
            let text: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", text.join(" "))?;
        }
    }
    Ok(())
}

pub fn save_ply(cloud: &PointCloud, path: &Path, binary: bool) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_ply(cloud, &mut w, binary)?;
    w.flush()?;
    Ok(())
}
