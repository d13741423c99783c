//! PLY reader and writer for positions, normals and edges.
//!
//! Reads `ascii` and `binary_little_endian` files with any scalar property
//! types. Only `vertex` (`x y z` and optionally `nx ny nz`) and `edge`
//! (`vertex1 vertex2`) are interpreted; other elements and properties,
//! including list properties such as `face vertex_indices`, are skipped.

use std::path::Path;

use super::{read_bytes, write_bytes};
use crate::geometry::{PointCloud, Vec3};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
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
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn decode(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar(String, Scalar),
    List { name: String, count: Scalar, item: Scalar },
}

impl Property {
    fn name(&self) -> &str {
        match self {
            Property::Scalar(n, _) | Property::List { name: n, .. } => n,
        }
    }
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

struct Header {
    format: PlyFormat,
    elements: Vec<Element>,
    body_offset: usize,
}

fn parse_header(bytes: &[u8], path: &Path) -> Result<Header> {
    let mut offset = 0;
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    let mut first = true;
    loop {
        let rest = &bytes[offset..];
        let Some(len) = rest.iter().position(|&b| b == b'\n') else {
            return Err(Error::format(path, Some(offset as u64), "header ends without end_header"));
        };
        let line_start = offset;
        let line = std::str::from_utf8(&rest[..len])
            .map_err(|_| Error::format(path, Some(line_start as u64), "header is not valid UTF-8"))?
            .trim_end_matches('\r');
        offset += len + 1;
        let bad = |msg: &str| Error::format(path, Some(line_start as u64), format!("{msg}: `{line}`"));
        let words: Vec<&str> = line.split_whitespace().collect();
        if first {
            if line != "ply" {
                return Err(Error::format(path, Some(0), "missing `ply` magic"));
            }
            first = false;
            continue;
        }
        match words.as_slice() {
            [] => {}
            ["comment", ..] | ["obj_info", ..] => {}
            ["format", fmt, _version] => {
                format = Some(match *fmt {
                    "ascii" => PlyFormat::Ascii,
                    "binary_little_endian" => PlyFormat::BinaryLittleEndian,
                    _ => return Err(bad("unsupported format")),
                });
            }
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count.parse().map_err(|_| bad("bad element count"))?,
                properties: Vec::new(),
            }),
            ["property", "list", count, item, name] => {
                let el = elements.last_mut().ok_or_else(|| bad("property before element"))?;
                el.properties.push(Property::List {
                    name: name.to_string(),
                    count: Scalar::parse(count).ok_or_else(|| bad("unknown type"))?,
                    item: Scalar::parse(item).ok_or_else(|| bad("unknown type"))?,
                });
            }
            ["property", ty, name] => {
                let el = elements.last_mut().ok_or_else(|| bad("property before element"))?;
                el.properties
                    .push(Property::Scalar(name.to_string(), Scalar::parse(ty).ok_or_else(|| bad("unknown type"))?));
            }
            ["end_header"] => break,
            _ => return Err(bad("unrecognised header line")),
        }
    }
    let format = format.ok_or_else(|| Error::format(path, Some(0), "header has no format line"))?;
    Ok(Header {
        format,
        elements,
        body_offset: offset,
    })
}

/// Sequential value source over the body.
trait Body {
    /// Next value and the byte offset it started at.
    fn next(&mut self, ty: Scalar) -> Result<f64>;
    /// Called at the end of every element instance.
    fn end_row(&mut self) -> Result<()> {
        Ok(())
    }
}

struct BinaryBody<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl Body for BinaryBody<'_> {
    fn next(&mut self, ty: Scalar) -> Result<f64> {
        let end = self.pos + ty.size();
        if end > self.bytes.len() {
            return Err(Error::format(self.path, Some(self.pos as u64), "unexpected end of binary body"));
        }
        let v = ty.decode(&self.bytes[self.pos..end]);
        self.pos = end;
        Ok(v)
    }
}

struct AsciiBody<'a> {
    bytes: &'a [u8],
    pos: usize,
    line_start: usize,
    path: &'a Path,
}

impl AsciiBody<'_> {
    fn skip_blank(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            if self.bytes[self.pos] == b'\n' {
                self.line_start = self.pos + 1;
            }
            self.pos += 1;
        }
    }
}

impl Body for AsciiBody<'_> {
    fn next(&mut self, ty: Scalar) -> Result<f64> {
        // Tokens of one row stay on one line.
        while self.pos < self.bytes.len() && matches!(self.bytes[self.pos], b' ' | b'\t' | b'\r') {
            self.pos += 1;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format(self.path, Some(start as u64), "missing value in ASCII row"));
        }
        let tok = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap_or("");
        let v: f64 = tok
            .parse()
            .map_err(|_| Error::format(self.path, Some(start as u64), format!("cannot parse `{tok}`")))?;
        if !matches!(ty, Scalar::F32 | Scalar::F64) && v.fract() != 0.0 {
            return Err(Error::format(self.path, Some(start as u64), format!("`{tok}` is not an integer")));
        }
        Ok(v)
    }

    fn end_row(&mut self) -> Result<()> {
        while self.pos < self.bytes.len() && matches!(self.bytes[self.pos], b' ' | b'\t' | b'\r') {
            self.pos += 1;
        }
        if self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
            return Err(Error::format(self.path, Some(self.line_start as u64), "extra values at end of row"));
        }
        self.skip_blank();
        Ok(())
    }
}

fn read_elements(header: &Header, body: &mut dyn Body, path: &Path) -> Result<PointCloud> {
    let mut cloud = PointCloud::default();
    let mut edges = Vec::new();
    let mut saw_vertex = false;
    for el in &header.elements {
        let is_vertex = el.name == "vertex";
        let is_edge = el.name == "edge";
        let slot = |names: &[&str]| -> Vec<Option<usize>> {
            names
                .iter()
                .map(|n| {
                    el.properties
                        .iter()
                        .position(|p| p.name() == *n && matches!(p, Property::Scalar(..)))
                })
                .collect()
        };
        let pos_slots = slot(&["x", "y", "z"]);
        let normal_slots = slot(&["nx", "ny", "nz"]);
        let edge_slots = slot(&["vertex1", "vertex2"]);
        if is_vertex {
            saw_vertex = true;
            if pos_slots.iter().any(Option::is_none) {
                return Err(Error::format(path, None, "vertex element lacks x, y or z"));
            }
        }
        if is_edge && edge_slots.iter().any(Option::is_none) {
            return Err(Error::format(path, None, "edge element lacks vertex1 or vertex2"));
        }
        let has_normals = is_vertex && normal_slots.iter().all(Option::is_some);
        let mut row = vec![0.0; el.properties.len()];
        for _ in 0..el.count {
            for (i, p) in el.properties.iter().enumerate() {
                match p {
                    Property::Scalar(_, ty) => row[i] = body.next(*ty)?,
                    Property::List { count, item, .. } => {
                        let n = body.next(*count)?;
                        for _ in 0..n as usize {
                            body.next(*item)?;
                        }
                    }
                }
            }
            body.end_row()?;
            let get = |s: &[Option<usize>], k: usize| row[s[k].unwrap()];
            if is_vertex {
                cloud.positions.push(Vec3::new(get(&pos_slots, 0), get(&pos_slots, 1), get(&pos_slots, 2)));
                if has_normals {
                    cloud
                        .normals
                        .push(Vec3::new(get(&normal_slots, 0), get(&normal_slots, 1), get(&normal_slots, 2)));
                }
            } else if is_edge {
                edges.push((get(&edge_slots, 0), get(&edge_slots, 1)));
            }
        }
    }
    if !saw_vertex {
        return Err(Error::format(path, None, "no vertex element"));
    }
    let n = cloud.len() as f64;
    for &(a, b) in &edges {
        if a < 0.0 || b < 0.0 || a >= n || b >= n {
            return Err(Error::format(path, None, format!("edge ({a}, {b}) references a missing vertex")));
        }
    }
    cloud.set_edges(edges.into_iter().map(|(a, b)| (a as u32, b as u32)));
    Ok(cloud)
}

/// Parses PLY bytes; `path` is only used in error messages.
pub fn parse_ply(bytes: &[u8], path: &Path) -> Result<PointCloud> {
    let header = parse_header(bytes, path)?;
    let body_bytes = bytes;
    match header.format {
        PlyFormat::BinaryLittleEndian => {
            let mut body = BinaryBody {
                bytes: body_bytes,
                pos: header.body_offset,
                path,
            };
            read_elements(&header, &mut body, path)
        }
        PlyFormat::Ascii => {
            let mut body = AsciiBody {
                bytes: body_bytes,
                pos: header.body_offset,
                line_start: header.body_offset,
                path,
            };
            body.skip_blank();
            read_elements(&header, &mut body, path)
        }
    }
}

pub fn read_ply(path: &Path) -> Result<PointCloud> {
    parse_ply(&read_bytes(path)?, path)
}

/// Encodes positions (and normals when present) as `double` vertex
/// properties and edges as an `edge` element of `int` pairs.
pub fn encode_ply(cloud: &PointCloud, format: PlyFormat) -> Vec<u8> {
    let normals = cloud.has_normals();
    let mut out = String::from("ply\n");
    out += match format {
        PlyFormat::Ascii => "format ascii 1.0\n",
        PlyFormat::BinaryLittleEndian => "format binary_little_endian 1.0\n",
    };
    out += &format!("element vertex {}\n", cloud.len());
    for p in ["x", "y", "z"] {
        out += &format!("property double {p}\n");
    }
    if normals {
        for p in ["nx", "ny", "nz"] {
            out += &format!("property double {p}\n");
        }
    }
    if !cloud.edges.is_empty() {
        out += &format!("element edge {}\nproperty int vertex1\nproperty int vertex2\n", cloud.edges.len());
    }
    out += "end_header\n";
    let mut bytes = out.into_bytes();
    for (i, p) in cloud.positions.iter().enumerate() {
        let mut vals = vec![p.x, p.y, p.z];
        if normals {
            let n = cloud.normals[i];
            vals.extend([n.x, n.y, n.z]);
        }
        match format {
            PlyFormat::Ascii => {
                let line: Vec<String> = vals.iter().map(|v| format!("{v:?}")).collect();
                bytes.extend(line.join(" ").bytes());
                bytes.push(b'\n');
            }
            PlyFormat::BinaryLittleEndian => vals.iter().for_each(|v| bytes.extend(v.to_le_bytes())),
        }
    }
    for &(a, b) in &cloud.edges {
        match format {
            PlyFormat::Ascii => bytes.extend(format!("{a} {b}\n").bytes()),
            PlyFormat::BinaryLittleEndian => {
                bytes.extend((a as i32).to_le_bytes());
                bytes.extend((b as i32).to_le_bytes());
            }
        }
    }
    bytes
}

pub fn write_ply(path: &Path, cloud: &PointCloud, format: PlyFormat) -> Result<()> {
    write_bytes(path, &encode_ply(cloud, format))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> PointCloud {
        let mut c = PointCloud {
            positions: vec![Vec3::new(0.1, -2.5, 3.0), Vec3::new(1e-7, 4.0, -0.3), Vec3::new(7.0, 8.0, 9.0)],
            normals: vec![Vec3::z(), Vec3::x(), -Vec3::y()],
            edges: vec![],
        };
        c.set_edges([(0, 1), (2, 1)]);
        c
    }

    #[test]
    fn reads_foreign_layouts() {
        let text = "ply\r\nformat ascii 1.0\r\ncomment made elsewhere\r\nelement vertex 2\r\nproperty float x\r\nproperty float y\r\nproperty float z\r\nproperty uchar red\r\nelement face 1\r\nproperty list uchar int vertex_indices\r\nend_header\r\n1 2 3 255\r\n4 5 6 0\r\n3 0 1 1\r\n";
        let c = parse_ply(text.as_bytes(), Path::new("a.ply")).unwrap();
        assert_eq!(c.positions, vec![Vec3::new(1.0, 2.0, 3.0), Vec3::new(4.0, 5.0, 6.0)]);
        assert!(c.normals.is_empty());

        let mut bin = b"ply\nformat binary_little_endian 1.0\nelement vertex 1\nproperty float x\nproperty short y\nproperty double z\nelement face 1\nproperty list uchar uint vertex_indices\nend_header\n".to_vec();
        bin.extend(1.5f32.to_le_bytes());
        bin.extend((-3i16).to_le_bytes());
        bin.extend(0.25f64.to_le_bytes());
        bin.push(2);
        bin.extend(0u32.to_le_bytes());
        bin.extend(0u32.to_le_bytes());
        let c = parse_ply(&bin, Path::new("b.ply")).unwrap();
        assert_eq!(c.positions, vec![Vec3::new(1.5, -3.0, 0.25)]);
    }

    #[test]
    fn errors_report_offsets() {
        let p = Path::new("bad.ply");
        assert_eq!(parse_ply(b"plx\n", p).unwrap_err().offset(), Some(0));
        let text = b"ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nend_header\n1 2 zz\n";
        let err = parse_ply(text, p).unwrap_err();
        let off = err.offset().unwrap() as usize;
        assert_eq!(&text[off..off + 2], b"zz");

        let mut bin = encode_ply(&sample(), PlyFormat::BinaryLittleEndian);
        let full = bin.len();
        bin.truncate(full - 3);
        let err = parse_ply(&bin, p).unwrap_err();
        assert_eq!(err.offset(), Some((full - 4) as u64));

        let big = b"ply\nformat binary_big_endian 1.0\nend_header\n";
        assert_eq!(parse_ply(big, p).unwrap_err().offset(), Some(4));
    }

    proptest! {
        #[test]
        fn round_trip(
            pts in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3, -1e3f64..1e3), 2..40),
            ascii in any::<bool>(),
        ) {
            let mut cloud = PointCloud::from_positions(pts.iter().map(|&(x, y, z)| Vec3::new(x, y, z)).collect());
            cloud.normals = pts.iter().map(|&(x, y, z)| Vec3::new(y + 0.5, z, x).normalize()).collect();
            let n = cloud.len() as u32;
            cloud.set_edges((1..n).map(|i| (i - 1, i)));
            let fmt = if ascii { PlyFormat::Ascii } else { PlyFormat::BinaryLittleEndian };
            let back = parse_ply(&encode_ply(&cloud, fmt), Path::new("rt.ply")).unwrap();
            prop_assert_eq!(back, cloud);
        }
    }
}
