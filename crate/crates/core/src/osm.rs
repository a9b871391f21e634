//! Streaming OpenStreetMap XML reader.
//!
//! Only `<node>`, `<way>`, `<nd>` and `<tag>` elements are interpreted;
//! relations and metadata are skipped.

use std::collections::{BTreeMap, HashSet};
use std::io::BufRead;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use thiserror::Error;

use crate::geo::GeoPoint;

#[derive(Debug, Error)]
pub enum OsmError {
    #[error("parse error at line {line}, byte {offset}: {message}")]
    ParseError { line: u64, offset: u64, message: String },
    #[error("way {way} references missing node {node}")]
    MissingNode { way: i64, node: i64 },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Tags = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq)]
pub struct RawNode {
    pub id: i64,
    pub point: GeoPoint,
    pub tags: Tags,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawWay {
    pub id: i64,
    pub node_refs: Vec<i64>,
    pub tags: Tags,
}

impl RawWay {
    pub fn tag(&self, key: &str) -> Option<&str> {
        self.tags.get(key).map(String::as_str)
    }
}

/// Nodes and ways of one OSM document, in document order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OsmData {
    pub nodes: Vec<RawNode>,
    pub ways: Vec<RawWay>,
}

impl OsmData {
    pub fn node_index(&self) -> BTreeMap<i64, &RawNode> {
        self.nodes.iter().map(|n| (n.id, n)).collect()
    }
}

/// Counts newlines in the bytes the XML reader consumes so errors can carry
/// a line number.
struct LineCounter<R> {
    inner: R,
    newlines: u64,
}

impl<R: BufRead> std::io::Read for LineCounter<R> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.newlines += buf[..n].iter().filter(|&&b| b == b'\n').count() as u64;
        Ok(n)
    }
}

impl<R: BufRead> BufRead for LineCounter<R> {
    fn fill_buf(&mut self) -> std::io::Result<&[u8]> {
        self.inner.fill_buf()
    }

    fn consume(&mut self, amt: usize) {
        if let Ok(buf) = self.inner.fill_buf() {
            let amt = amt.min(buf.len());
            self.newlines += buf[..amt].iter().filter(|&&b| b == b'\n').count() as u64;
        }
        self.inner.consume(amt);
    }
}

enum Open {
    None,
    Node(RawNode),
    Way(RawWay),
}

/// Parses an OSM XML document.
pub fn parse_osm<R: BufRead>(input: R) -> Result<OsmData, OsmError> {
    let mut reader = Reader::from_reader(LineCounter {
        inner: input,
        newlines: 0,
    });
    let mut data = OsmData::default();
    let mut open = Open::None;
    let mut buf = Vec::new();

    macro_rules! fail {
        ($msg:expr) => {
            return Err(OsmError::ParseError {
                line: reader.get_ref().newlines + 1,
                offset: reader.buffer_position(),
                message: $msg.to_string(),
            })
        };
    }

    loop {
        let event = match reader.read_event_into(&mut buf) {
            Ok(ev) => ev,
            Err(e) => fail!(e),
        };
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let empty = matches!(event, Event::Empty(_));
                match e.name().as_ref() {
                    b"node" => {
                        let attrs = match attributes(e) {
                            Ok(a) => a,
                            Err(m) => fail!(m),
                        };
                        let node = match node_from_attrs(&attrs) {
                            Ok(n) => n,
                            Err(m) => fail!(m),
                        };
                        if empty {
                            data.nodes.push(node);
                        } else {
                            open = Open::Node(node);
                        }
                    }
                    b"way" => {
                        let attrs = match attributes(e) {
                            Ok(a) => a,
                            Err(m) => fail!(m),
                        };
                        let id = match parse_attr::<i64>(&attrs, "id") {
                            Ok(id) => id,
                            Err(m) => fail!(m),
                        };
                        let way = RawWay {
                            id,
                            node_refs: Vec::new(),
                            tags: Tags::new(),
                        };
                        if empty {
                            data.ways.push(way);
                        } else {
                            open = Open::Way(way);
                        }
                    }
                    b"nd" => {
                        if let Open::Way(way) = &mut open {
                            let attrs = match attributes(e) {
                                Ok(a) => a,
                                Err(m) => fail!(m),
                            };
                            match parse_attr::<i64>(&attrs, "ref") {
                                Ok(r) => way.node_refs.push(r),
                                Err(m) => fail!(m),
                            }
                        }
                    }
                    b"tag" => {
                        let attrs = match attributes(e) {
                            Ok(a) => a,
                            Err(m) => fail!(m),
                        };
                        let (Some(k), Some(v)) = (attrs.get("k"), attrs.get("v")) else {
                            fail!("tag element without k/v");
                        };
                        match &mut open {
                            Open::Node(n) => {
                                n.tags.insert(k.clone(), v.clone());
                            }
                            Open::Way(w) => {
                                w.tags.insert(k.clone(), v.clone());
                            }
                            Open::None => {}
                        }
                    }
                    _ => {}
                }
            }
            Event::End(ref e) => match e.name().as_ref() {
                b"node" => {
                    if let Open::Node(n) = std::mem::replace(&mut open, Open::None) {
                        data.nodes.push(n);
                    }
                }
                b"way" => {
                    if let Open::Way(w) = std::mem::replace(&mut open, Open::None) {
                        data.ways.push(w);
                    }
                }
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }

    if !matches!(open, Open::None) {
        return Err(OsmError::ParseError {
            line: reader.get_ref().newlines + 1,
            offset: reader.buffer_position(),
            message: "unexpected end of document inside element".into(),
        });
    }

    let known: HashSet<i64> = data.nodes.iter().map(|n| n.id).collect();
    for way in &data.ways {
        if let Some(&missing) = way.node_refs.iter().find(|r| !known.contains(r)) {
            return Err(OsmError::MissingNode {
                way: way.id,
                node: missing,
            });
        }
    }
    Ok(data)
}

pub fn parse_osm_file(path: &std::path::Path) -> Result<OsmData, OsmError> {
    let file = std::fs::File::open(path)?;
    parse_osm(std::io::BufReader::new(file))
}

fn attributes(e: &BytesStart<'_>) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for attr in e.attributes() {
        let attr = attr.map_err(|err| err.to_string())?;
        let key = String::from_utf8_lossy(attr.key.as_ref()).into_owned();
        let value = attr.unescape_value().map_err(|err| err.to_string())?.into_owned();
        out.insert(key, value);
    }
    Ok(out)
}

fn parse_attr<T: std::str::FromStr>(attrs: &BTreeMap<String, String>, key: &str) -> Result<T, String> {
    let raw = attrs.get(key).ok_or_else(|| format!("missing attribute '{key}'"))?;
    raw.trim()
        .parse()
        .map_err(|_| format!("invalid value '{raw}' for attribute '{key}'"))
}

fn node_from_attrs(attrs: &BTreeMap<String, String>) -> Result<RawNode, String> {
    let id = parse_attr::<i64>(attrs, "id")?;
    let lat = parse_attr::<f64>(attrs, "lat")?;
    let lon = parse_attr::<f64>(attrs, "lon")?;
    let point = GeoPoint::new(lat, lon).map_err(|e| format!("node {id}: {e}"))?;
    Ok(RawNode {
        id,
        point,
        tags: Tags::new(),
    })
}
