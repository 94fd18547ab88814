use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde_json::{Map, Value};

use super::{Dataset, InteractionRecord, Side, UserProfile};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Csv,
    Jsonl,
}

impl DataFormat {
    /// Guesses the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> DataFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") | Some("json") => DataFormat::Jsonl,
            _ => DataFormat::Csv,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            DataFormat::Csv => "csv",
            DataFormat::Jsonl => "jsonl",
        }
    }
}

impl std::str::FromStr for DataFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(DataFormat::Csv),
            "jsonl" | "ndjson" => Ok(DataFormat::Jsonl),
            other => Err(format!("unknown data format '{other}'")),
        }
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn attr_position(name: &str) -> Option<usize> {
    name.strip_prefix("attr")?.parse().ok()
}

fn parse_f64(path: &Path, line: usize, field: &str, raw: &str) -> Result<f64> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Ok(0.0);
    }
    raw.parse()
        .map_err(|_| parse_err(path, line, format!("{field}: '{raw}' is not a number")))
}

/// Reads a profile table. Latent columns are optional and default to 0.
pub fn load_profiles(path: &Path, format: DataFormat) -> Result<Vec<UserProfile>> {
    match format {
        DataFormat::Csv => load_profiles_csv(path),
        DataFormat::Jsonl => load_profiles_jsonl(path),
    }
}

fn load_profiles_csv(path: &Path) -> Result<Vec<UserProfile>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (id_c, side_c, group_c) = match (col("id"), col("side"), col("group")) {
        (Some(i), Some(s), Some(g)) => (i, s, g),
        _ => return Err(parse_err(path, 1, "profile header needs id, side, group")),
    };
    let mut attr_cols: Vec<(usize, usize)> = headers
        .iter()
        .enumerate()
        .filter_map(|(c, h)| attr_position(h).map(|p| (p, c)))
        .collect();
    attr_cols.sort_unstable();
    let att_c = col("attractiveness");
    let act_c = col("activity");

    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| csv_err(path, e))?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        let get = |c: usize| row.get(c).unwrap_or("");
        let side: Side = get(side_c)
            .parse()
            .map_err(|m: String| parse_err(path, line, m))?;
        let mut p = UserProfile::new(get(id_c), side, get(group_c));
        p.attributes = attr_cols.iter().map(|&(_, c)| get(c).to_string()).collect();
        if let Some(c) = att_c {
            p.attractiveness = parse_f64(path, line, "attractiveness", get(c))?;
        }
        if let Some(c) = act_c {
            p.activity = parse_f64(path, line, "activity", get(c))?;
        }
        if p.id.is_empty() {
            return Err(parse_err(path, line, "empty id"));
        }
        out.push(p);
    }
    Ok(out)
}

fn json_lines(path: &Path) -> Result<Vec<(usize, Map<String, Value>)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Value>(&line) {
            Ok(Value::Object(map)) => out.push((i + 1, map)),
            Ok(_) => return Err(parse_err(path, i + 1, "expected a JSON object")),
            Err(e) => return Err(parse_err(path, i + 1, e.to_string())),
        }
    }
    Ok(out)
}

fn json_str(path: &Path, line: usize, obj: &Map<String, Value>, key: &str) -> Result<String> {
    match obj.get(key) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Number(n)) => Ok(n.to_string()),
        _ => Err(parse_err(
            path,
            line,
            format!("missing string field '{key}'"),
        )),
    }
}

fn json_f64(path: &Path, line: usize, obj: &Map<String, Value>, key: &str) -> Result<f64> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(0.0),
        Some(Value::Number(n)) => n
            .as_f64()
            .ok_or_else(|| parse_err(path, line, format!("{key}: not representable"))),
        Some(Value::String(s)) => parse_f64(path, line, key, s),
        Some(_) => Err(parse_err(path, line, format!("{key}: expected a number"))),
    }
}

fn load_profiles_jsonl(path: &Path) -> Result<Vec<UserProfile>> {
    let mut out = Vec::new();
    for (line, obj) in json_lines(path)? {
        let side: Side = json_str(path, line, &obj, "side")?
            .parse()
            .map_err(|m: String| parse_err(path, line, m))?;
        let mut p = UserProfile::new(
            json_str(path, line, &obj, "id")?,
            side,
            json_str(path, line, &obj, "group")?,
        );
        let mut attrs: Vec<(usize, String)> = Vec::new();
        for (k, v) in &obj {
            if let Some(pos) = attr_position(k) {
                let val = match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                attrs.push((pos, val));
            }
        }
        attrs.sort();
        p.attributes = attrs.into_iter().map(|(_, v)| v).collect();
        p.attractiveness = json_f64(path, line, &obj, "attractiveness")?;
        p.activity = json_f64(path, line, &obj, "activity")?;
        out.push(p);
    }
    Ok(out)
}

/// Reads raw interaction records (no validation against profiles).
pub fn load_interactions(path: &Path, format: DataFormat) -> Result<Vec<InteractionRecord>> {
    match format {
        DataFormat::Csv => {
            let mut rdr = csv::ReaderBuilder::new()
                .trim(csv::Trim::All)
                .from_path(path)
                .map_err(|e| csv_err(path, e))?;
            let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
            let col = |name: &str| headers.iter().position(|h| h == name);
            let (from_c, to_c, ts_c) = match (col("from"), col("to"), col("timestamp")) {
                (Some(f), Some(t), Some(s)) => (f, t, s),
                _ => {
                    return Err(parse_err(
                        path,
                        1,
                        "interaction header must be from,to,timestamp",
                    ))
                }
            };
            let mut out = Vec::new();
            for row in rdr.records() {
                let row = row.map_err(|e| csv_err(path, e))?;
                let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
                let ts_raw = row.get(ts_c).unwrap_or("");
                let timestamp = ts_raw.parse().map_err(|_| {
                    parse_err(
                        path,
                        line,
                        format!("timestamp: '{ts_raw}' is not an integer"),
                    )
                })?;
                out.push(InteractionRecord::new(
                    row.get(from_c).unwrap_or(""),
                    row.get(to_c).unwrap_or(""),
                    timestamp,
                ));
            }
            Ok(out)
        }
        DataFormat::Jsonl => json_lines(path)?
            .into_iter()
            .map(|(line, obj)| {
                let timestamp = match obj.get("timestamp") {
                    Some(Value::Number(n)) => n.as_u64(),
                    Some(Value::String(s)) => s.parse().ok(),
                    _ => None,
                }
                .ok_or_else(|| parse_err(path, line, "timestamp must be a non-negative integer"))?;
                Ok(InteractionRecord::new(
                    json_str(path, line, &obj, "from")?,
                    json_str(path, line, &obj, "to")?,
                    timestamp,
                ))
            })
            .collect(),
    }
}

/// Loads and validates a profile file plus an interaction file.
pub fn load_dataset(profiles: &Path, interactions: &Path, format: DataFormat) -> Result<Dataset> {
    let p = load_profiles(profiles, format)?;
    let r = load_interactions(interactions, format)?;
    Dataset::new(p, r)
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    let message = e.to_string();
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        _ => parse_err(path, line, message),
    }
}

/// Writes `profiles.<ext>` and `interactions.<ext>` into `dir`.
pub fn write_dataset(dataset: &Dataset, dir: &Path, format: DataFormat) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let ext = format.extension();
    write_profiles(dataset, &dir.join(format!("profiles.{ext}")), format)?;
    write_interactions(dataset, &dir.join(format!("interactions.{ext}")), format)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_profiles(dataset: &Dataset, path: &Path, format: DataFormat) -> Result<()> {
    let width = dataset
        .profiles()
        .iter()
        .map(|p| p.attributes.len())
        .max()
        .unwrap_or(0);
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    match format {
        DataFormat::Csv => {
            let mut header = vec!["id".to_string(), "side".into(), "group".into()];
            header.extend((1..=width).map(|i| format!("attr{i}")));
            header.push("attractiveness".into());
            header.push("activity".into());
            writeln!(w, "{}", header.join(",")).map_err(io)?;
            for p in dataset.profiles() {
                let mut row = vec![p.id.clone(), p.side.to_string(), p.group.clone()];
                for i in 0..width {
                    row.push(p.attributes.get(i).cloned().unwrap_or_default());
                }
                row.push(p.attractiveness.to_string());
                row.push(p.activity.to_string());
                writeln!(w, "{}", row.join(",")).map_err(io)?;
            }
        }
        DataFormat::Jsonl => {
            for p in dataset.profiles() {
                let mut obj = Map::new();
                obj.insert("id".into(), p.id.clone().into());
                obj.insert("side".into(), p.side.to_string().into());
                obj.insert("group".into(), p.group.clone().into());
                for (i, a) in p.attributes.iter().enumerate() {
                    obj.insert(format!("attr{}", i + 1), a.clone().into());
                }
                obj.insert("attractiveness".into(), p.attractiveness.into());
                obj.insert("activity".into(), p.activity.into());
                writeln!(w, "{}", Value::Object(obj)).map_err(io)?;
            }
        }
    }
    w.flush().map_err(io)
}

fn write_interactions(dataset: &Dataset, path: &Path, format: DataFormat) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    if format == DataFormat::Csv {
        writeln!(w, "from,to,timestamp").map_err(io)?;
    }
    for r in dataset.records() {
        match format {
            DataFormat::Csv => writeln!(w, "{},{},{}", r.from, r.to, r.timestamp),
            DataFormat::Jsonl => writeln!(w, "{}", serde_json::to_string(r)?),
        }
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    const PROFILES: &str = "id,side,group,attr1,attr2,attractiveness,activity\n\
                            a,A,g0,x,y,0.5,1.0\n\
                            b,B,g1,x,z,,\n\
                            c,A,g1,y,y,0.1,0\n";

    #[test]
    fn header_only_interactions() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "p.csv", PROFILES);
        let i = write(dir.path(), "i.csv", "from,to,timestamp\n");
        let ds = load_dataset(&p, &i, DataFormat::Csv).unwrap();
        assert_eq!(ds.len(), 3);
        assert!(ds.records().is_empty());
        let b = ds.profile(ds.index_of("b").unwrap());
        assert_eq!(b.attractiveness, 0.0);
        assert_eq!(b.attributes, vec!["x", "z"]);
    }

    #[test]
    fn duplicate_rows_collapse() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "p.csv", PROFILES);
        let i = write(dir.path(), "i.csv", "from,to,timestamp\na,b,1\na,b,2\n");
        let ds = load_dataset(&p, &i, DataFormat::Csv).unwrap();
        assert_eq!(ds.records().len(), 1);
    }

    #[test]
    fn same_side_row_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "p.csv", PROFILES);
        let i = write(dir.path(), "i.csv", "from,to,timestamp\na,c,1\n");
        let err = load_dataset(&p, &i, DataFormat::Csv).unwrap_err();
        assert!(err.to_string().contains("same-side edge"));
    }

    #[test]
    fn parse_error_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let i = write(dir.path(), "i.csv", "from,to,timestamp\na,b,1\na,b,oops\n");
        match load_interactions(&i, DataFormat::Csv).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
        let j = write(
            dir.path(),
            "i.jsonl",
            "{\"from\":\"a\",\"to\":\"b\",\"timestamp\":1}\n{oops\n",
        );
        match load_interactions(&j, DataFormat::Jsonl).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn jsonl_matches_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "p.csv", PROFILES);
        let i = write(dir.path(), "i.csv", "from,to,timestamp\na,b,1\nb,c,2\n");
        let ds = load_dataset(&p, &i, DataFormat::Csv).unwrap();
        let out = dir.path().join("out");
        write_dataset(&ds, &out, DataFormat::Jsonl).unwrap();
        let back = load_dataset(
            &out.join("profiles.jsonl"),
            &out.join("interactions.jsonl"),
            DataFormat::Jsonl,
        )
        .unwrap();
        assert_eq!(back.digest(), ds.digest());
        write_dataset(&ds, &out, DataFormat::Csv).unwrap();
        let back = load_dataset(
            &out.join("profiles.csv"),
            &out.join("interactions.csv"),
            DataFormat::Csv,
        )
        .unwrap();
        assert_eq!(back.digest(), ds.digest());
    }
}
