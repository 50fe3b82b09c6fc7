//! Readers and writers for external instance formats.
//!
//! Supported inputs are DIMACS `.col`, the Toronto examination pair
//! (`.crs` + `.stu`), ITC-2007 track 3 `.ctt` files and the native
//! line-oriented `bcsdp-v1` format. Partition files hold one class per line.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::graph::{ConflictGraph, Partition, TimetablingInstance};
use crate::{Error, Result};

pub const NATIVE_MAGIC: &str = "bcsdp-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFormat {
    Dimacs,
    Toronto,
    Itc2007,
    Native,
}

impl SourceFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceFormat::Dimacs => "dimacs",
            SourceFormat::Toronto => "toronto",
            SourceFormat::Itc2007 => "itc2007",
            SourceFormat::Native => "native",
        }
    }
}

impl FromStr for SourceFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dimacs" => Ok(SourceFormat::Dimacs),
            "toronto" => Ok(SourceFormat::Toronto),
            "itc2007" => Ok(SourceFormat::Itc2007),
            "native" => Ok(SourceFormat::Native),
            other => Err(Error::InvalidArgument(format!("unknown format '{other}'"))),
        }
    }
}

/// Course data from an ITC-2007 file that the relaxations do not use.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ItcExtras {
    pub days: usize,
    pub periods_per_day: usize,
    pub teachers: Vec<String>,
    pub lectures: Vec<usize>,
    pub min_working_days: Vec<usize>,
    pub room_ids: Vec<String>,
    /// (course, day, period) triples.
    pub unavailability: Vec<(usize, usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDocument {
    pub name: String,
    pub instance: TimetablingInstance,
    pub source_format: SourceFormat,
    /// External id per vertex; empty when the source has none.
    pub labels: Vec<String>,
    pub itc: Option<ItcExtras>,
}

impl InstanceDocument {
    pub fn new(name: impl Into<String>, instance: TimetablingInstance, source_format: SourceFormat) -> Self {
        InstanceDocument {
            name: name.into(),
            instance,
            source_format,
            labels: Vec::new(),
            itc: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::Instance("document name is empty".into()));
        }
        if !self.labels.is_empty() && self.labels.len() != self.instance.n() {
            return Err(Error::Instance(format!(
                "{} labels for {} events",
                self.labels.len(),
                self.instance.n()
            )));
        }
        self.instance.validate()
    }
}

/// Meaningful lines with 1-based numbers; blank lines are skipped.
fn numbered(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn num<T: FromStr>(token: Option<&str>, line: usize, what: &str) -> Result<T> {
    let token = token.ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
    token
        .parse()
        .map_err(|_| Error::parse(line, format!("bad {what} '{token}'")))
}

pub fn parse_dimacs(text: &str) -> Result<ConflictGraph> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut edges = Vec::new();
    for (line, l) in numbered(text) {
        let mut tok = l.split_whitespace();
        match tok.next() {
            Some("c") => {}
            Some("p") => {
                if header.is_some() {
                    return Err(Error::parse(line, "second problem line"));
                }
                match tok.next() {
                    Some("edge" | "edges" | "col") => {}
                    _ => return Err(Error::parse(line, "expected 'p edge <n> <m>'")),
                }
                let n = num(tok.next(), line, "vertex count")?;
                let m = num(tok.next(), line, "edge count")?;
                header = Some((n, m, line));
            }
            Some("e") => {
                let (n, _, _) = header.ok_or_else(|| Error::parse(line, "edge before problem line"))?;
                let u: usize = num(tok.next(), line, "vertex id")?;
                let v: usize = num(tok.next(), line, "vertex id")?;
                for x in [u, v] {
                    if x == 0 || x > n {
                        return Err(Error::parse(line, format!("vertex id {x} outside 1..={n}")));
                    }
                }
                if u == v {
                    return Err(Error::parse(line, format!("self-loop at vertex {u}")));
                }
                edges.push((u - 1, v - 1));
            }
            Some(other) => return Err(Error::parse(line, format!("unknown line type '{other}'"))),
            None => {}
        }
    }
    let (n, m, line) = header.ok_or_else(|| Error::parse(0, "missing problem line"))?;
    if edges.len() != m {
        return Err(Error::parse(
            line,
            format!("header declares {m} edges but {} edge lines follow", edges.len()),
        ));
    }
    ConflictGraph::from_edges(n, edges)
}

pub fn write_dimacs(g: &ConflictGraph) -> String {
    let mut out = format!("p edge {} {}\n", g.n(), g.edge_count());
    for &(u, v) in g.edges() {
        let _ = writeln!(out, "e {} {}", u + 1, v + 1);
    }
    out
}

/// Reads a Toronto examination instance. Vertex order follows the `.crs`
/// file; there are no rooms, so `m = n` with every room large enough for
/// every exam.
pub fn parse_toronto(name: &str, crs: &str, stu: &str) -> Result<InstanceDocument> {
    let mut index = HashMap::new();
    let mut labels = Vec::new();
    let mut sizes = Vec::new();
    for (line, l) in numbered(crs) {
        let mut tok = l.split_whitespace();
        let id = tok.next().unwrap_or_default().to_string();
        let size: u64 = num(tok.next(), line, "enrolment")?;
        if index.insert(id.clone(), labels.len()).is_some() {
            return Err(Error::parse(line, format!("exam '{id}' listed twice")));
        }
        labels.push(id);
        sizes.push(size.max(1));
    }
    let mut edges = BTreeSet::new();
    for (line, l) in numbered(stu) {
        let mut exams = Vec::new();
        for id in l.split_whitespace() {
            let &v = index
                .get(id)
                .ok_or_else(|| Error::parse(line, format!("exam '{id}' not in course file")))?;
            exams.push(v);
        }
        exams.sort_unstable();
        exams.dedup();
        for (i, &u) in exams.iter().enumerate() {
            for &v in &exams[i + 1..] {
                edges.insert((u, v));
            }
        }
    }
    let n = labels.len();
    let graph = ConflictGraph::from_edges(n, edges)?;
    let cap = sizes.iter().copied().max().unwrap_or(1);
    let mut instance = TimetablingInstance::bounded(graph, n.max(1));
    instance.event_sizes = sizes;
    instance.room_capacities = vec![cap; n.max(1)];
    let mut doc = InstanceDocument::new(name, instance, SourceFormat::Toronto);
    doc.labels = labels;
    doc.validate()?;
    Ok(doc)
}

const ITC_SECTIONS: [&str; 4] = ["COURSES:", "ROOMS:", "CURRICULA:", "UNAVAILABILITY_CONSTRAINTS:"];

/// Reads an ITC-2007 curriculum-based course timetabling file. Each course is
/// one vertex; two courses conflict when they share a curriculum or a
/// teacher.
pub fn parse_itc2007(text: &str) -> Result<InstanceDocument> {
    let mut header: HashMap<String, (usize, String)> = HashMap::new();
    let mut sections: HashMap<&str, Vec<(usize, &str)>> = HashMap::new();
    let mut current: Option<&str> = None;
    for (line, l) in numbered(text) {
        if l == "END." {
            break;
        }
        if let Some(&s) = ITC_SECTIONS.iter().find(|&&s| s == l) {
            if sections.insert(s, Vec::new()).is_some() {
                return Err(Error::parse(line, format!("section {s} repeated")));
            }
            current = Some(s);
            continue;
        }
        match current {
            Some(s) => sections.get_mut(s).expect("section opened").push((line, l)),
            None => {
                let (key, value) = l
                    .split_once(':')
                    .ok_or_else(|| Error::parse(line, format!("expected 'Key: value', got '{l}'")))?;
                header.insert(key.trim().to_string(), (line, value.trim().to_string()));
            }
        }
    }
    let field = |key: &str| -> Result<usize> {
        let (line, value) = header
            .get(key)
            .ok_or_else(|| Error::parse(0, format!("missing header field '{key}'")))?;
        num(Some(value.as_str()), *line, key)
    };
    let section = |s: &'static str| -> Result<&Vec<(usize, &str)>> {
        sections
            .get(s)
            .ok_or_else(|| Error::parse(0, format!("missing section {s}")))
    };
    let check = |s: &'static str, key: &str| -> Result<()> {
        let declared = field(key)?;
        let found = section(s)?.len();
        if declared != found {
            let line = header[key].0;
            return Err(Error::parse(
                line,
                format!("header declares {declared} {key} but {s} has {found} lines"),
            ));
        }
        Ok(())
    };
    check("COURSES:", "Courses")?;
    check("ROOMS:", "Rooms")?;
    check("CURRICULA:", "Curricula")?;
    let constraints_key = if header.contains_key("Constraints") {
        "Constraints"
    } else {
        "UnavailabilityConstraints"
    };
    check("UNAVAILABILITY_CONSTRAINTS:", constraints_key)?;

    let name = header
        .get("Name")
        .map(|(_, v)| v.clone())
        .ok_or_else(|| Error::parse(0, "missing header field 'Name'"))?;
    let mut extras = ItcExtras {
        days: field("Days")?,
        periods_per_day: field("Periods_per_day")?,
        ..ItcExtras::default()
    };

    let mut index = HashMap::new();
    let mut labels = Vec::new();
    let mut sizes = Vec::new();
    for &(line, l) in section("COURSES:")? {
        let mut tok = l.split_whitespace();
        let id = tok.next().unwrap_or_default().to_string();
        let teacher = tok
            .next()
            .ok_or_else(|| Error::parse(line, "missing teacher"))?
            .to_string();
        extras.lectures.push(num(tok.next(), line, "lecture count")?);
        extras
            .min_working_days
            .push(num(tok.next(), line, "minimum working days")?);
        let students: u64 = num(tok.next(), line, "student count")?;
        if index.insert(id.clone(), labels.len()).is_some() {
            return Err(Error::parse(line, format!("course '{id}' listed twice")));
        }
        labels.push(id);
        extras.teachers.push(teacher);
        sizes.push(students.max(1));
    }

    let mut capacities = Vec::new();
    for &(line, l) in section("ROOMS:")? {
        let mut tok = l.split_whitespace();
        extras.room_ids.push(tok.next().unwrap_or_default().to_string());
        let cap: u64 = num(tok.next(), line, "room capacity")?;
        capacities.push(cap.max(1));
    }
    if capacities.is_empty() {
        return Err(Error::parse(0, "ROOMS section is empty"));
    }

    let course = |id: &str, line: usize| -> Result<usize> {
        index
            .get(id)
            .copied()
            .ok_or_else(|| Error::parse(line, format!("unknown course '{id}'")))
    };
    let mut edges = BTreeSet::new();
    for &(line, l) in section("CURRICULA:")? {
        let mut tok = l.split_whitespace();
        tok.next();
        let count: usize = num(tok.next(), line, "curriculum size")?;
        let members = tok.map(|id| course(id, line)).collect::<Result<Vec<_>>>()?;
        if members.len() != count {
            return Err(Error::parse(
                line,
                format!("curriculum declares {count} courses but lists {}", members.len()),
            ));
        }
        for (i, &u) in members.iter().enumerate() {
            for &v in &members[i + 1..] {
                if u != v {
                    edges.insert((u.min(v), u.max(v)));
                }
            }
        }
    }
    let mut by_teacher: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (v, t) in extras.teachers.iter().enumerate() {
        by_teacher.entry(t).or_default().push(v);
    }
    for group in by_teacher.values() {
        for (i, &u) in group.iter().enumerate() {
            for &v in &group[i + 1..] {
                edges.insert((u, v));
            }
        }
    }

    for &(line, l) in section("UNAVAILABILITY_CONSTRAINTS:")? {
        let mut tok = l.split_whitespace();
        let c = course(tok.next().unwrap_or_default(), line)?;
        let day = num(tok.next(), line, "day")?;
        let period = num(tok.next(), line, "period")?;
        extras.unavailability.push((c, day, period));
    }

    let graph = ConflictGraph::from_edges(labels.len(), edges)?;
    let mut instance = TimetablingInstance::bounded(graph, capacities.len());
    instance.event_sizes = sizes;
    instance.room_capacities = capacities;
    let mut doc = InstanceDocument::new(name, instance, SourceFormat::Itc2007);
    doc.labels = labels;
    doc.itc = Some(extras);
    doc.validate()?;
    Ok(doc)
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// Serializes a document in the native format. ITC extras are not stored.
pub fn write_native(doc: &InstanceDocument) -> Result<String> {
    doc.validate()?;
    if doc.name.contains('\n') {
        return Err(Error::InvalidArgument("document name spans lines".into()));
    }
    if let Some(l) = doc
        .labels
        .iter()
        .find(|l| l.is_empty() || l.contains(char::is_whitespace))
    {
        return Err(Error::InvalidArgument(format!(
            "label '{l}' is empty or has whitespace"
        )));
    }
    let inst = &doc.instance;
    let mut out = String::new();
    let _ = writeln!(out, "{NATIVE_MAGIC}");
    let _ = writeln!(out, "name {}", doc.name.trim());
    let _ = writeln!(out, "source {}", doc.source_format.as_str());
    let _ = writeln!(out, "GRAPH {} {}", inst.n(), inst.graph.edge_count());
    if inst.n() > 0 {
        let _ = writeln!(out, "size {}", join(&inst.event_sizes));
        if let Some(w) = &inst.weights {
            let _ = writeln!(out, "weight {}", join(w));
        }
        if !doc.labels.is_empty() {
            let _ = writeln!(out, "label {}", doc.labels.join(" "));
        }
    }
    for &(u, v) in inst.graph.edges() {
        let _ = writeln!(out, "e {u} {v}");
    }
    let _ = writeln!(out, "ROOMS {}", inst.m);
    let _ = writeln!(out, "capacity {}", join(&inst.room_capacities));
    let _ = writeln!(
        out,
        "FEATURES {} {} {}",
        inst.feature_count,
        inst.event_features.len(),
        inst.room_features.len()
    );
    for &(v, f) in &inst.event_features {
        let _ = writeln!(out, "event {v} {f}");
    }
    for &(r, f) in &inst.room_features {
        let _ = writeln!(out, "room {r} {f}");
    }
    let _ = writeln!(out, "PRECOLOUR {}", inst.precolouring.len());
    for class in &inst.precolouring {
        let _ = writeln!(out, "class {}", join(class));
    }
    let _ = writeln!(out, "END");
    Ok(out)
}

#[derive(PartialEq, PartialOrd)]
enum Section {
    Preamble,
    Graph,
    Rooms,
    Features,
    Precolour,
    End,
}

fn list<T: FromStr>(rest: &str, line: usize, what: &str) -> Result<Vec<T>> {
    rest.split_whitespace().map(|t| num(Some(t), line, what)).collect()
}

pub fn parse_native(text: &str) -> Result<InstanceDocument> {
    let mut lines = numbered(text).filter(|(_, l)| !l.starts_with('#'));
    match lines.next() {
        Some((_, NATIVE_MAGIC)) => {}
        Some((line, l)) => return Err(Error::parse(line, format!("expected '{NATIVE_MAGIC}', got '{l}'"))),
        None => return Err(Error::parse(0, "empty input")),
    }
    let mut section = Section::Preamble;
    let mut name = None;
    let mut source = SourceFormat::Native;
    let (mut n, mut declared_edges, mut m) = (0usize, 0usize, None);
    let mut sizes = None;
    let mut weights = None;
    let mut labels = Vec::new();
    let mut edges = Vec::new();
    let mut capacities = None;
    let (mut features, mut n_event_features, mut n_room_features) = (0usize, 0usize, 0usize);
    let mut event_features = BTreeSet::new();
    let mut room_features = BTreeSet::new();
    let mut precolour_count = 0usize;
    let mut precolouring = Vec::new();
    let mut seen_graph = false;

    let enter = |next: Section, line: usize, current: &mut Section| -> Result<()> {
        if next <= *current {
            return Err(Error::parse(line, "section out of order"));
        }
        *current = next;
        Ok(())
    };

    for (line, l) in lines {
        let (key, rest) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
        let rest = rest.trim();
        let mut tok = rest.split_whitespace();
        match (key, &section) {
            (_, Section::End) => return Err(Error::parse(line, "content after END")),
            ("name", Section::Preamble) => name = Some(rest.to_string()),
            ("source", Section::Preamble) => {
                source = rest
                    .parse()
                    .map_err(|_| Error::parse(line, format!("unknown source '{rest}'")))?;
            }
            ("GRAPH", _) => {
                enter(Section::Graph, line, &mut section)?;
                n = num(tok.next(), line, "vertex count")?;
                declared_edges = num(tok.next(), line, "edge count")?;
                seen_graph = true;
            }
            ("size", Section::Graph) => sizes = Some(list::<u64>(rest, line, "size")?),
            ("weight", Section::Graph) => weights = Some(list::<u64>(rest, line, "weight")?),
            ("label", Section::Graph) => labels = rest.split_whitespace().map(String::from).collect(),
            ("e", Section::Graph) => {
                let u: usize = num(tok.next(), line, "vertex id")?;
                let v: usize = num(tok.next(), line, "vertex id")?;
                if u >= n || v >= n {
                    return Err(Error::parse(line, format!("edge ({u}, {v}) outside 0..{n}")));
                }
                edges.push((u, v));
            }
            ("ROOMS", _) => {
                enter(Section::Rooms, line, &mut section)?;
                m = Some(num::<usize>(tok.next(), line, "room count")?);
            }
            ("capacity", Section::Rooms) => capacities = Some(list::<u64>(rest, line, "capacity")?),
            ("FEATURES", _) => {
                enter(Section::Features, line, &mut section)?;
                features = num(tok.next(), line, "feature count")?;
                n_event_features = num(tok.next(), line, "event feature count")?;
                n_room_features = num(tok.next(), line, "room feature count")?;
            }
            ("event", Section::Features) => {
                event_features.insert((num(tok.next(), line, "event")?, num(tok.next(), line, "feature")?));
            }
            ("room", Section::Features) => {
                room_features.insert((num(tok.next(), line, "room")?, num(tok.next(), line, "feature")?));
            }
            ("PRECOLOUR", _) => {
                enter(Section::Precolour, line, &mut section)?;
                precolour_count = num(tok.next(), line, "class count")?;
            }
            ("class", Section::Precolour) => precolouring.push(list::<usize>(rest, line, "vertex id")?),
            ("END", _) => enter(Section::End, line, &mut section)?,
            _ => return Err(Error::parse(line, format!("unexpected '{key}' here"))),
        }
    }
    if section != Section::End {
        return Err(Error::parse(0, "missing END"));
    }
    if !seen_graph {
        return Err(Error::parse(0, "missing GRAPH section"));
    }
    let m = m.ok_or_else(|| Error::parse(0, "missing ROOMS section"))?;
    let graph = ConflictGraph::from_edges(n, edges)?;
    if graph.edge_count() != declared_edges {
        return Err(Error::parse(
            0,
            format!("GRAPH declares {declared_edges} edges, found {}", graph.edge_count()),
        ));
    }
    if event_features.len() != n_event_features || room_features.len() != n_room_features {
        return Err(Error::parse(0, "feature counts do not match the FEATURES header"));
    }
    if precolouring.len() != precolour_count {
        return Err(Error::parse(
            0,
            "pre-colouring class count does not match the PRECOLOUR header",
        ));
    }
    let mut instance = TimetablingInstance::bounded(graph, m);
    instance.event_sizes = sizes.unwrap_or_else(|| vec![1; n]);
    instance.room_capacities = capacities.unwrap_or_else(|| vec![1; m]);
    instance.weights = weights;
    instance.feature_count = features;
    instance.event_features = event_features;
    instance.room_features = room_features;
    instance.precolouring = precolouring;
    let mut doc = InstanceDocument::new(name.unwrap_or_default(), instance, source);
    doc.labels = labels;
    doc.validate()?;
    Ok(doc)
}

/// Reads a partition: one class per line, vertex ids separated by
/// whitespace, each optionally suffixed with `@room`. `#` starts a comment.
pub fn parse_partition(text: &str) -> Result<Partition> {
    let mut classes = Vec::new();
    let mut rooms = BTreeMap::new();
    for (line, l) in numbered(text) {
        let l = l.split('#').next().unwrap_or_default().trim();
        if l.is_empty() {
            continue;
        }
        let mut class = Vec::new();
        for token in l.split_whitespace() {
            let (v, room) = match token.split_once('@') {
                Some((v, r)) => (v, Some(num::<usize>(Some(r), line, "room")?)),
                None => (token, None),
            };
            let v: usize = num(Some(v), line, "vertex id")?;
            if let Some(r) = room {
                rooms.insert(v, r);
            }
            class.push(v);
        }
        classes.push(class);
    }
    let mut part = Partition::new(classes);
    if !rooms.is_empty() {
        part.room_of = Some(rooms);
    }
    Ok(part)
}

pub fn write_partition(part: &Partition) -> String {
    let mut out = String::new();
    for class in &part.classes {
        let tokens: Vec<String> = class
            .iter()
            .map(|&v| match part.room_of.as_ref().and_then(|r| r.get(&v)) {
                Some(r) => format!("{v}@{r}"),
                None => v.to_string(),
            })
            .collect();
        let _ = writeln!(out, "{}", tokens.join(" "));
    }
    out
}
