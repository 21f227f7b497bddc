//! Edge-list and marginals files.
//!
//! Edge lists are CSV with the header `holder,issuer,weight`, one positive
//! edge per row. Labels are opaque and may not contain commas; they are
//! mapped to indices in order of first appearance.
//!
//! Marginals files hold the link count and both strength sequences:
//!
//! ```text
//! total_links,3
//! [holders]
//! label,strength
//! h0,1.5
//! h1,3.5
//! [issuers]
//! label,strength
//! s0,2.5
//! s1,2.5
//! ```

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::network::{BipartiteNetwork, StrengthSequences};

pub const EDGE_HEADER: [&str; 3] = ["holder", "issuer", "weight"];

/// Relative tolerance on ΣV vs ΣC accepted when reading marginals.
pub const MARGINALS_REL_TOL: f64 = 1e-6;

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => io_err(path, source),
        kind => parse_err(path, line, format!("{kind:?}")),
    }
}

fn check_label(path: &Path, line: u64, label: &str) -> Result<()> {
    if label.is_empty() {
        return Err(parse_err(path, line, "empty label"));
    }
    if label.contains(',') {
        return Err(parse_err(path, line, format!("label {label:?} contains a comma")));
    }
    Ok(())
}

fn parse_positive(path: &Path, line: u64, field: &str, what: &str) -> Result<f64> {
    let x: f64 = field
        .trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("{what} {field:?} is not a number")))?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(parse_err(
            path,
            line,
            format!("{what} must be positive and finite, got {field}"),
        ));
    }
    Ok(x)
}

/// Interns labels in first-appearance order, or resolves them against a
/// fixed universe.
enum LabelMap {
    Open(HashMap<String, usize>, Vec<String>),
    Fixed(HashMap<String, usize>, &'static str),
}

impl LabelMap {
    fn fixed(labels: &[String], layer: &'static str) -> Self {
        LabelMap::Fixed(labels.iter().enumerate().map(|(k, l)| (l.clone(), k)).collect(), layer)
    }

    fn index(&mut self, path: &Path, line: u64, label: &str) -> Result<usize> {
        match self {
            LabelMap::Open(map, order) => Ok(*map.entry(label.to_string()).or_insert_with(|| {
                order.push(label.to_string());
                order.len() - 1
            })),
            LabelMap::Fixed(map, layer) => map
                .get(label)
                .copied()
                .ok_or_else(|| parse_err(path, line, format!("unknown {layer} label {label:?}"))),
        }
    }
}

struct RawEdges {
    triples: Vec<(usize, usize, f64)>,
    lines: Vec<u64>,
}

fn read_edges<R: Read>(reader: R, path: &Path, holders: &mut LabelMap, issuers: &mut LabelMap) -> Result<RawEdges> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().map(str::trim).ne(EDGE_HEADER) {
        return Err(parse_err(
            path,
            1,
            format!(
                "expected header {:?}, found {:?}",
                EDGE_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut raw = RawEdges {
        triples: Vec::new(),
        lines: Vec::new(),
    };
    for record in rdr.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let (h, s, w) = (&record[0], &record[1], &record[2]);
        check_label(path, line, h)?;
        check_label(path, line, s)?;
        let weight = parse_positive(path, line, w, "weight")?;
        let i = holders.index(path, line, h)?;
        let a = issuers.index(path, line, s)?;
        raw.triples.push((i, a, weight));
        raw.lines.push(line);
    }
    Ok(raw)
}

fn build(path: &Path, raw: RawEdges, n: usize, m: usize) -> Result<BipartiteNetwork> {
    BipartiteNetwork::new(n, m, raw.triples.iter().copied()).map_err(|e| match e {
        Error::DuplicateEdge { holder, issuer } => {
            let mut hits = raw
                .triples
                .iter()
                .zip(&raw.lines)
                .filter(|((i, a, _), _)| *i == holder && *a == issuer)
                .map(|(_, l)| *l);
            let first = hits.next().unwrap_or(0);
            let line = hits.next().unwrap_or(0);
            parse_err(path, line, format!("duplicate pair (first seen on line {first})"))
        }
        other => other,
    })
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| io_err(path, e))
}

/// Reads an edge list; node sets are the labels that appear in it.
pub fn read_edge_list(path: impl AsRef<Path>) -> Result<BipartiteNetwork> {
    let path = path.as_ref();
    parse_edge_list(open(path)?, path)
}

/// [`read_edge_list`] from any reader; `path` is only used in errors.
pub fn parse_edge_list<R: Read>(reader: R, path: &Path) -> Result<BipartiteNetwork> {
    let mut holders = LabelMap::Open(HashMap::new(), Vec::new());
    let mut issuers = LabelMap::Open(HashMap::new(), Vec::new());
    let raw = read_edges(reader, path, &mut holders, &mut issuers)?;
    let (LabelMap::Open(_, h), LabelMap::Open(_, s)) = (holders, issuers) else {
        unreachable!()
    };
    build(path, raw, h.len(), s.len())?.with_labels(h, s)
}

/// Reads an edge list onto known node sets (e.g. those of a marginals
/// file), so isolated nodes keep their place. Unknown labels are errors.
pub fn read_edge_list_with_labels(
    path: impl AsRef<Path>,
    holder_labels: &[String],
    issuer_labels: &[String],
) -> Result<BipartiteNetwork> {
    let path = path.as_ref();
    let mut holders = LabelMap::fixed(holder_labels, "holder");
    let mut issuers = LabelMap::fixed(issuer_labels, "issuer");
    let raw = read_edges(open(path)?, path, &mut holders, &mut issuers)?;
    build(path, raw, holder_labels.len(), issuer_labels.len())?
        .with_labels(holder_labels.to_vec(), issuer_labels.to_vec())
}

fn check_labels_writable(path: &Path, labels: &[String]) -> Result<()> {
    labels.iter().try_for_each(|l| check_label(path, 0, l))
}

/// Writes edges in canonical order. Weights use the shortest decimal that
/// reads back to the same f64.
pub fn write_edge_list<W: Write>(net: &BipartiteNetwork, out: W, path: &Path) -> Result<()> {
    check_labels_writable(path, net.holder_labels())?;
    check_labels_writable(path, net.issuer_labels())?;
    let mut out = BufWriter::new(out);
    let io = |e| io_err(path, e);
    writeln!(out, "{}", EDGE_HEADER.join(",")).map_err(io)?;
    let (h, s) = (net.holder_labels(), net.issuer_labels());
    for e in net.edges() {
        writeln!(out, "{},{},{}", h[e.holder], s[e.issuer], e.weight).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn write_edge_list_file(net: &BipartiteNetwork, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    write_edge_list(net, file, path)
}

/// Strength sequences, link count and node labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Marginals {
    pub strengths: StrengthSequences,
    pub total_links: usize,
    pub holder_labels: Vec<String>,
    pub issuer_labels: Vec<String>,
}

impl Marginals {
    pub fn of(net: &BipartiteNetwork) -> Self {
        Self {
            strengths: net.strengths(),
            total_links: net.n_links(),
            holder_labels: net.holder_labels().to_vec(),
            issuer_labels: net.issuer_labels().to_vec(),
        }
    }
}

pub fn read_marginals(path: impl AsRef<Path>) -> Result<Marginals> {
    let path = path.as_ref();
    parse_marginals(open(path)?, path)
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Preamble,
    Holders,
    Issuers,
}

pub fn parse_marginals<R: BufRead>(reader: R, path: &Path) -> Result<Marginals> {
    let mut links: Option<usize> = None;
    let mut section = Section::Preamble;
    let mut expect_header = false;
    let (mut h_labels, mut h_values) = (Vec::new(), Vec::new());
    let (mut s_labels, mut s_values) = (Vec::new(), Vec::new());
    let mut seen: [HashMap<String, u64>; 2] = Default::default();
    for (k, line) in reader.lines().enumerate() {
        let line_no = k as u64 + 1;
        let line = line.map_err(|e| io_err(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match line {
            "[holders]" | "[issuers]" => {
                let next = if line == "[holders]" {
                    Section::Holders
                } else {
                    Section::Issuers
                };
                let done = match next {
                    Section::Holders => !h_labels.is_empty() || section == Section::Holders,
                    _ => !s_labels.is_empty() || section == Section::Issuers,
                };
                if done {
                    return Err(parse_err(path, line_no, format!("repeated section {line}")));
                }
                section = next;
                expect_header = true;
                continue;
            }
            _ => {}
        }
        if expect_header {
            if line != "label,strength" {
                return Err(parse_err(
                    path,
                    line_no,
                    format!("expected header \"label,strength\", found {line:?}"),
                ));
            }
            expect_header = false;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 {
            return Err(parse_err(
                path,
                line_no,
                format!("expected 2 fields, found {}", fields.len()),
            ));
        }
        match section {
            Section::Preamble => {
                if fields[0] != "total_links" || links.is_some() {
                    return Err(parse_err(path, line_no, format!("unexpected line {line:?}")));
                }
                links = Some(
                    fields[1]
                        .trim()
                        .parse()
                        .map_err(|_| parse_err(path, line_no, format!("invalid link count {:?}", fields[1])))?,
                );
            }
            Section::Holders | Section::Issuers => {
                let label = fields[0];
                check_label(path, line_no, label)?;
                let value: f64 = fields[1]
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(path, line_no, format!("invalid strength {:?}", fields[1])))?;
                if !(value >= 0.0 && value.is_finite()) {
                    return Err(parse_err(
                        path,
                        line_no,
                        format!("strength must be non-negative, got {value}"),
                    ));
                }
                let (layer, labels, values) = if section == Section::Holders {
                    (0, &mut h_labels, &mut h_values)
                } else {
                    (1, &mut s_labels, &mut s_values)
                };
                if let Some(first) = seen[layer].insert(label.to_string(), line_no) {
                    return Err(parse_err(
                        path,
                        line_no,
                        format!("label {label:?} repeats line {first}"),
                    ));
                }
                labels.push(label.to_string());
                values.push(value);
            }
        }
    }
    let total_links = links.ok_or_else(|| parse_err(path, 0, "missing total_links line"))?;
    if h_labels.is_empty() || s_labels.is_empty() {
        return Err(parse_err(path, 0, "both [holders] and [issuers] sections are required"));
    }
    let strengths = StrengthSequences::with_tolerance(h_values, s_values, MARGINALS_REL_TOL)?;
    let max = strengths.positive_pairs();
    if total_links > max {
        return Err(parse_err(
            path,
            0,
            format!("total_links {total_links} exceeds the {max} pairs with positive strengths"),
        ));
    }
    Ok(Marginals {
        strengths,
        total_links,
        holder_labels: h_labels,
        issuer_labels: s_labels,
    })
}

pub fn write_marginals<W: Write>(m: &Marginals, out: W, path: &Path) -> Result<()> {
    check_labels_writable(path, &m.holder_labels)?;
    check_labels_writable(path, &m.issuer_labels)?;
    let mut out = BufWriter::new(out);
    let io = |e| io_err(path, e);
    writeln!(out, "total_links,{}", m.total_links).map_err(io)?;
    for (name, labels, values) in [
        ("holders", &m.holder_labels, m.strengths.holder()),
        ("issuers", &m.issuer_labels, m.strengths.issuer()),
    ] {
        writeln!(out, "[{name}]\nlabel,strength").map_err(io)?;
        for (l, v) in labels.iter().zip(values) {
            writeln!(out, "{l},{v}").map_err(io)?;
        }
    }
    out.flush().map_err(io)
}

pub fn write_marginals_file(m: &Marginals, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    write_marginals(m, file, path)
}

/// Placeholder path for in-memory parsing.
pub fn memory_path() -> PathBuf {
    PathBuf::from("<memory>")
}
