//! CSV writing: one `#` comment line naming the run and its units, then a
//! header row and the records.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "RINGKEY_OUT_DIR";

pub fn write_csv<W: Write, T: Serialize>(mut out: W, comment: &str, rows: &[T]) -> Result<()> {
    writeln!(out, "# {comment}")?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file<T: Serialize>(path: &Path, comment: &str, rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let file =
        std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_csv(std::io::BufWriter::new(file), comment, rows)
}

/// `explicit` if given, else `<default_dir>/<name>`.
pub fn resolve_output(explicit: Option<&Path>, default_dir: &Path, name: &str) -> PathBuf {
    explicit.map_or_else(|| default_dir.join(name), Path::to_path_buf)
}

/// `dir/stem_suffix.csv` next to `path`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}_{suffix}.csv"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        x: f64,
        y: Option<u64>,
    }

    #[test]
    fn comment_then_header() {
        let mut buf = Vec::new();
        write_csv(
            &mut buf,
            "units: m",
            &[Row { x: 0.5, y: None }, Row { x: 1.0, y: Some(3) }],
        )
        .unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "# units: m\nx,y\n0.5,\n1.0,3\n"
        );
    }

    #[test]
    fn paths() {
        let p = resolve_output(None, Path::new("res"), "a.csv");
        assert_eq!(p, PathBuf::from("res/a.csv"));
        assert_eq!(
            sibling(Path::new("res/d.csv"), "fits"),
            PathBuf::from("res/d_fits.csv")
        );
    }
}
