use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::SolverError;
use crate::fsio::fmt_f64;

pub const HISTORY_HEADER: &str = "iter,eta_t,loss_s,loss_l,J,G,delta_w_sq,num_planes,mu1,mu2,lambda_sum";
pub const STATIONARITY_HEADER: &str = "iter,grad_u_sq,grad_v_sq,grad_v_proj_sq";

/// One row of the training history.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryRecord {
    pub iter: usize,
    pub eta_t: f64,
    pub loss_s: f64,
    pub loss_l: f64,
    pub j: f64,
    pub g: f64,
    pub delta_w_sq: f64,
    pub num_planes: usize,
    pub mu1: f64,
    pub mu2: f64,
    pub lambda_sum: f64,
}

impl HistoryRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.iter,
            fmt_f64(self.eta_t),
            fmt_f64(self.loss_s),
            fmt_f64(self.loss_l),
            fmt_f64(self.j),
            fmt_f64(self.g),
            fmt_f64(self.delta_w_sq),
            self.num_planes,
            fmt_f64(self.mu1),
            fmt_f64(self.mu2),
            fmt_f64(self.lambda_sum)
        )
    }
}

/// Squared gradient norms of the primal (`u = θ`) and dual (`v = λ, μ`)
/// blocks at one iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct StationarityRecord {
    pub iter: usize,
    pub grad_u_sq: f64,
    /// `‖∇_v L‖²`, the squared constraint values.
    pub grad_v_sq: f64,
    /// Squared norm of the projected dual step divided by its step size.
    pub grad_v_proj_sq: f64,
}

impl StationarityRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.iter,
            fmt_f64(self.grad_u_sq),
            fmt_f64(self.grad_v_sq),
            fmt_f64(self.grad_v_proj_sq)
        )
    }
}

/// Append-only CSV written to `.<name>.partial` and renamed into place by
/// [`CsvLog::finish`]. Rows are flushed to disk every `flush_every` pushes.
pub struct CsvLog {
    path: PathBuf,
    partial: PathBuf,
    out: BufWriter<File>,
    flush_every: usize,
    pending: usize,
}

impl CsvLog {
    pub fn create(path: &Path, header: &str, flush_every: usize) -> io::Result<Self> {
        let name = path
            .file_name()
            .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
        let partial = path.with_file_name(format!(".{}.partial", name.to_string_lossy()));
        let mut out = BufWriter::new(File::create(&partial)?);
        writeln!(out, "{header}")?;
        out.flush()?;
        Ok(Self { path: path.to_path_buf(), partial, out, flush_every: flush_every.max(1), pending: 0 })
    }

    /// Location of the in-progress file.
    pub fn partial_path(&self) -> &Path {
        &self.partial
    }

    pub fn push(&mut self, row: &str) -> io::Result<()> {
        writeln!(self.out, "{row}")?;
        self.pending += 1;
        if self.pending >= self.flush_every {
            self.out.flush()?;
            self.pending = 0;
        }
        Ok(())
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.out.flush()?;
        self.out.get_ref().sync_all()?;
        fs::rename(&self.partial, &self.path)
    }
}

fn parse_rows(path: &Path, header: &str, cols: usize) -> Result<Vec<Vec<String>>, SolverError> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let first = lines.next().transpose()?.unwrap_or_default();
    if first != header {
        return Err(SolverError::Format(format!("{}: unexpected header {first:?}", path.display())));
    }
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        let fields: Vec<String> = line.split(',').map(str::to_owned).collect();
        if fields.len() != cols {
            return Err(SolverError::Format(format!("{}: line {} has {} fields", path.display(), n + 2, fields.len())));
        }
        rows.push(fields);
    }
    Ok(rows)
}

fn num<T: std::str::FromStr>(s: &str, path: &Path) -> Result<T, SolverError> {
    s.parse().map_err(|_| SolverError::Format(format!("{}: cannot parse {s:?}", path.display())))
}

pub fn read_history(path: &Path) -> Result<Vec<HistoryRecord>, SolverError> {
    parse_rows(path, HISTORY_HEADER, 11)?
        .iter()
        .map(|f| {
            Ok(HistoryRecord {
                iter: num(&f[0], path)?,
                eta_t: num(&f[1], path)?,
                loss_s: num(&f[2], path)?,
                loss_l: num(&f[3], path)?,
                j: num(&f[4], path)?,
                g: num(&f[5], path)?,
                delta_w_sq: num(&f[6], path)?,
                num_planes: num(&f[7], path)?,
                mu1: num(&f[8], path)?,
                mu2: num(&f[9], path)?,
                lambda_sum: num(&f[10], path)?,
            })
        })
        .collect()
}

pub fn read_stationarity(path: &Path) -> Result<Vec<StationarityRecord>, SolverError> {
    parse_rows(path, STATIONARITY_HEADER, 4)?
        .iter()
        .map(|f| {
            Ok(StationarityRecord {
                iter: num(&f[0], path)?,
                grad_u_sq: num(&f[1], path)?,
                grad_v_sq: num(&f[2], path)?,
                grad_v_proj_sq: num(&f[3], path)?,
            })
        })
        .collect()
}

pub fn write_history(path: &Path, records: &[HistoryRecord]) -> io::Result<()> {
    let mut log = CsvLog::create(path, HISTORY_HEADER, usize::MAX)?;
    for r in records {
        log.push(&r.csv_row())?;
    }
    log.finish()
}

pub fn write_stationarity(path: &Path, records: &[StationarityRecord]) -> io::Result<()> {
    let mut log = CsvLog::create(path, STATIONARITY_HEADER, usize::MAX)?;
    for r in records {
        log.push(&r.csv_row())?;
    }
    log.finish()
}
