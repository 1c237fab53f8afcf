//! Artifact writers. Directories are created as needed; existing files are
//! only replaced with `force`.

use cgm_core::lpp::{GTable, GeodesicPath};
use cgm_core::stats::TestReport;
use cgm_core::MultiConfig;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{0} exists; pass --force to overwrite")]
    Exists(PathBuf),
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("{0}: {1}")]
    Csv(PathBuf, csv::Error),
}

pub struct OutDir {
    root: PathBuf,
    force: bool,
}

impl OutDir {
    pub fn new(root: &Path, force: bool) -> Result<Self, OutputError> {
        std::fs::create_dir_all(root).map_err(|e| OutputError::Io(root.to_path_buf(), e))?;
        Ok(OutDir {
            root: root.to_path_buf(),
            force,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn create(&self, name: &str) -> Result<(PathBuf, File), OutputError> {
        let p = self.path(name);
        let mut o = OpenOptions::new();
        o.write(true);
        if self.force {
            o.create(true).truncate(true);
        } else {
            o.create_new(true);
        }
        match o.open(&p) {
            Ok(f) => Ok((p, f)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(OutputError::Exists(p)),
            Err(e) => Err(OutputError::Io(p, e)),
        }
    }

    /// Refuses up front if any of `names` exists, so a run never leaves a
    /// half-written artifact set behind.
    pub fn claim(&self, names: &[String]) -> Result<(), OutputError> {
        if self.force {
            return Ok(());
        }
        match names.iter().map(|n| self.path(n)).find(|p| p.exists()) {
            Some(p) => Err(OutputError::Exists(p)),
            None => Ok(()),
        }
    }

    fn csv<R: IntoIterator<Item = Vec<String>>>(
        &self,
        name: &str,
        header: &[&str],
        rows: R,
    ) -> Result<PathBuf, OutputError> {
        let (p, f) = self.create(name)?;
        let mut w = csv::Writer::from_writer(BufWriter::new(f));
        let wrap = |e| OutputError::Csv(p.clone(), e);
        w.write_record(header).map_err(wrap)?;
        for r in rows {
            w.write_record(&r).map_err(wrap)?;
        }
        w.flush().map_err(|e| OutputError::Io(p.clone(), e))?;
        Ok(p)
    }

    /// `k,t,value` for every cell of the table.
    pub fn gtable(&self, name: &str, g: &GTable) -> Result<PathBuf, OutputError> {
        let rows = (0..g.rows).flat_map(|r| {
            (0..g.cols).map(move |c| {
                vec![
                    (g.origin.x + c as i64).to_string(),
                    (g.origin.y + r as i64).to_string(),
                    g.values[r * g.cols + c].to_string(),
                ]
            })
        });
        self.csv(name, &["k", "t", "value"], rows)
    }

    /// `line,index,value`, plus a `key=value` sidecar `<name>.meta`.
    pub fn multiconfig(&self, name: &str, c: &MultiConfig, meta: &[(&str, String)]) -> Result<PathBuf, OutputError> {
        let rows = c.lines.iter().enumerate().flat_map(|(l, line)| {
            line.values
                .iter()
                .enumerate()
                .map(move |(i, v)| vec![(l + 1).to_string(), (line.offset + i as i64).to_string(), v.to_string()])
        });
        let p = self.csv(name, &["line", "index", "value"], rows)?;
        let mut m: Vec<(&str, String)> = vec![("lines", c.n_lines().to_string()), ("offset", c.offset().to_string())];
        if let Some(r) = &c.rates {
            m.push(("rates", r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")));
        }
        m.extend_from_slice(meta);
        self.meta(&format!("{name}.meta"), &m)?;
        Ok(p)
    }

    /// `k,t,rho,horizontal,vertical`.
    pub fn edges(&self, name: &str, rows: &[(i64, i64, f64, f64, f64)]) -> Result<PathBuf, OutputError> {
        let rows = rows.iter().map(|(k, t, r, h, v)| {
            vec![
                k.to_string(),
                t.to_string(),
                r.to_string(),
                h.to_string(),
                v.to_string(),
            ]
        });
        self.csv(name, &["k", "t", "rho", "horizontal", "vertical"], rows)
    }

    /// `step_index,x,y`, index 0 being the start.
    pub fn path_csv(&self, name: &str, path: &GeodesicPath) -> Result<PathBuf, OutputError> {
        let rows = path
            .points()
            .into_iter()
            .enumerate()
            .map(|(i, p)| vec![i.to_string(), p.x.to_string(), p.y.to_string()]);
        self.csv(name, &["step_index", "x", "y"], rows)
    }

    /// `n,empirical,exact`.
    pub fn pmf(&self, name: &str, empirical: &[f64], exact: &[f64]) -> Result<PathBuf, OutputError> {
        let rows = empirical
            .iter()
            .zip(exact)
            .enumerate()
            .map(|(n, (e, x))| vec![n.to_string(), e.to_string(), x.to_string()]);
        self.csv(name, &["n", "empirical", "exact"], rows)
    }

    pub fn meta(&self, name: &str, pairs: &[(&str, String)]) -> Result<PathBuf, OutputError> {
        let (p, f) = self.create(name)?;
        let mut w = BufWriter::new(f);
        for (k, v) in pairs {
            writeln!(w, "{k}={v}").map_err(|e| OutputError::Io(p.clone(), e))?;
        }
        w.flush().map_err(|e| OutputError::Io(p.clone(), e))?;
        Ok(p)
    }

    pub fn reports(&self, name: &str, reports: &[TestReport]) -> Result<PathBuf, OutputError> {
        let (p, f) = self.create(name)?;
        let mut w = BufWriter::new(f);
        for r in reports {
            writeln!(w, "{}", r.to_json_line()).map_err(|e| OutputError::Io(p.clone(), e))?;
        }
        w.flush().map_err(|e| OutputError::Io(p.clone(), e))?;
        Ok(p)
    }
}
