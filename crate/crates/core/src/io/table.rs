use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::flow::StepSample;

/// Fixed leading columns of the trajectory CSV; `kappa_<r>` columns follow
/// `isop_ratio`.
pub const LEADING_COLUMNS: [&str; 12] = [
    "t", "A", "V", "W", "Wbar", "gb_defect", "lambda", "L43", "L2A", "diam", "diam_bound", "isop_ratio",
];
pub const TRAILING_COLUMNS: [&str; 4] = ["scale_defect", "trans_defect", "min_quality", "li_yau"];
pub const STEP_COLUMNS: [&str; 10] = [
    "t",
    "dt",
    "lambda",
    "A",
    "wbar_before",
    "wbar_after",
    "volume_rel_error",
    "max_speed",
    "halvings",
    "flips",
];

/// Floating-point text at 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn kappa_column(r: f64) -> String {
    format!("kappa_{r}")
}

pub fn header(kappa_radii: &[f64]) -> Vec<String> {
    LEADING_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain(kappa_radii.iter().map(|&r| kappa_column(r)))
        .chain(TRAILING_COLUMNS.iter().map(|s| s.to_string()))
        .collect()
}

fn row(rec: &DiagnosticsRecord) -> Vec<String> {
    let lead = [
        rec.t,
        rec.area,
        rec.volume,
        rec.willmore,
        rec.wbar,
        rec.gauss_bonnet_defect,
        rec.lambda,
        rec.accum_l43,
        rec.accum_l2a,
        rec.diameter,
        rec.diameter_bound,
        rec.isoperimetric_ratio,
    ];
    let trail = [rec.scale_defect, rec.translation_defect, rec.min_face_quality];
    lead.iter()
        .chain(rec.kappa.iter().map(|(_, v)| v))
        .chain(trail.iter())
        .map(|&v| fmt_f64(v))
        .chain(std::iter::once(rec.li_yau.to_string()))
        .collect()
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_comments(w: &mut impl Write, path: &Path, comments: &[String]) -> Result<()> {
    for c in comments {
        writeln!(w, "# {c}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Streams trajectory rows to a CSV file.
pub struct TrajectoryWriter {
    path: PathBuf,
    inner: csv::Writer<BufWriter<fs::File>>,
    columns: usize,
}

impl TrajectoryWriter {
    pub fn create(path: impl AsRef<Path>, kappa_radii: &[f64], comments: &[String]) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut file = create(&path)?;
        write_comments(&mut file, &path, comments)?;
        let mut inner = csv::Writer::from_writer(file);
        let head = header(kappa_radii);
        inner.write_record(&head)?;
        Ok(TrajectoryWriter {
            path,
            inner,
            columns: head.len(),
        })
    }

    pub fn write(&mut self, rec: &DiagnosticsRecord) -> Result<()> {
        let r = row(rec);
        if r.len() != self.columns {
            return Err(Error::BadParams(format!(
                "record has {} columns, header has {}",
                r.len(),
                self.columns
            )));
        }
        self.inner.write_record(&r)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush().map_err(|e| Error::io(&self.path, e))
    }
}

pub fn write_trajectory(
    path: impl AsRef<Path>,
    kappa_radii: &[f64],
    records: &[DiagnosticsRecord],
    comments: &[String],
) -> Result<()> {
    let mut w = TrajectoryWriter::create(path, kappa_radii, comments)?;
    for r in records {
        w.write(r)?;
    }
    w.finish()
}

/// Contents of a trajectory or step CSV: leading `#` comments plus rows.
#[derive(Debug, Clone, Default)]
pub struct TrajectoryTable {
    pub comments: Vec<String>,
    pub kappa_radii: Vec<f64>,
    pub records: Vec<DiagnosticsRecord>,
}

fn split_comments(path: &Path) -> Result<(Vec<String>, String)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut comments = Vec::new();
    let mut body = String::new();
    let mut in_header = true;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if in_header {
            if let Some(c) = line.strip_prefix('#') {
                comments.push(c.trim().to_string());
                continue;
            }
            in_header = false;
        }
        body.push_str(&line);
        body.push('\n');
    }
    Ok((comments, body))
}

fn parse_cell(path: &Path, line: usize, col: &str, s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::parse(path, line, format!("column {col}: bad number {s:?}")))
}

pub fn read_trajectory(path: impl AsRef<Path>) -> Result<TrajectoryTable> {
    let path = path.as_ref();
    let (comments, body) = split_comments(path)?;
    let header_line = comments.len() + 1;
    let mut rdr = csv::ReaderBuilder::new().from_reader(body.as_bytes());
    let head: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let nk = head.len().checked_sub(LEADING_COLUMNS.len() + TRAILING_COLUMNS.len());
    let Some(nk) = nk else {
        return Err(Error::parse(path, header_line, "too few columns"));
    };
    for (i, name) in LEADING_COLUMNS.iter().enumerate() {
        if head[i] != *name {
            return Err(Error::parse(path, header_line, format!("expected column {name}, found {}", head[i])));
        }
    }
    for (i, name) in TRAILING_COLUMNS.iter().enumerate() {
        let found = &head[LEADING_COLUMNS.len() + nk + i];
        if found != name {
            return Err(Error::parse(path, header_line, format!("expected column {name}, found {found}")));
        }
    }
    let kappa_radii: Vec<f64> = head[LEADING_COLUMNS.len()..LEADING_COLUMNS.len() + nk]
        .iter()
        .map(|c| {
            c.strip_prefix("kappa_")
                .and_then(|r| r.parse().ok())
                .ok_or_else(|| Error::parse(path, header_line, format!("bad kappa column {c:?}")))
        })
        .collect::<Result<_>>()?;

    let mut records = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = header_line + 1 + i;
        if rec.len() != head.len() {
            return Err(Error::parse(path, line, format!("expected {} fields, found {}", head.len(), rec.len())));
        }
        let v = |k: usize| parse_cell(path, line, &head[k], &rec[k]);
        let kappa = (0..nk)
            .map(|j| Ok((kappa_radii[j], v(LEADING_COLUMNS.len() + j)?)))
            .collect::<Result<_>>()?;
        let base = LEADING_COLUMNS.len() + nk;
        let li_yau = match rec[base + 3].trim() {
            "true" => true,
            "false" => false,
            other => return Err(Error::parse(path, line, format!("li_yau: expected true/false, found {other:?}"))),
        };
        records.push(DiagnosticsRecord {
            t: v(0)?,
            area: v(1)?,
            volume: v(2)?,
            willmore: v(3)?,
            wbar: v(4)?,
            gauss_bonnet_defect: v(5)?,
            lambda: v(6)?,
            accum_l43: v(7)?,
            accum_l2a: v(8)?,
            diameter: v(9)?,
            diameter_bound: v(10)?,
            isoperimetric_ratio: v(11)?,
            kappa,
            scale_defect: v(base)?,
            translation_defect: v(base + 1)?,
            min_face_quality: v(base + 2)?,
            li_yau,
        });
    }
    Ok(TrajectoryTable {
        comments,
        kappa_radii,
        records,
    })
}

pub fn write_steps(path: impl AsRef<Path>, steps: &[StepSample], comments: &[String]) -> Result<()> {
    let path = path.as_ref();
    let mut file = create(path)?;
    write_comments(&mut file, path, comments)?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(STEP_COLUMNS)?;
    for s in steps {
        let floats = [
            s.t,
            s.dt,
            s.lambda,
            s.area,
            s.wbar_before,
            s.wbar_after,
            s.volume_rel_error,
            s.max_speed,
        ];
        let mut r: Vec<String> = floats.iter().map(|&v| fmt_f64(v)).collect();
        r.push(s.halvings.to_string());
        r.push(s.flips.to_string());
        w.write_record(&r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_steps(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<StepSample>)> {
    let path = path.as_ref();
    let (comments, body) = split_comments(path)?;
    let header_line = comments.len() + 1;
    let mut rdr = csv::ReaderBuilder::new().from_reader(body.as_bytes());
    let head: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if head != STEP_COLUMNS {
        return Err(Error::parse(path, header_line, format!("unexpected step columns {head:?}")));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = header_line + 1 + i;
        let v = |k: usize| parse_cell(path, line, STEP_COLUMNS[k], &rec[k]);
        let n = |k: usize| {
            rec[k]
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::parse(path, line, format!("column {}: bad integer", STEP_COLUMNS[k])))
        };
        out.push(StepSample {
            t: v(0)?,
            dt: v(1)?,
            lambda: v(2)?,
            area: v(3)?,
            wbar_before: v(4)?,
            wbar_after: v(5)?,
            volume_rel_error: v(6)?,
            max_speed: v(7)?,
            halvings: n(8)?,
            flips: n(9)?,
        });
    }
    Ok((comments, out))
}
