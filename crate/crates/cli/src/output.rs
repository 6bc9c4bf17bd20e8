use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use cantor_core::{BoundedValue, Real};
use serde_json::{json, Value};

pub fn real(x: &Real) -> Value {
    json!({ "lo": x.lo_f64(), "hi": x.hi_f64() })
}

pub fn bounded(x: &BoundedValue) -> Value {
    json!({ "lo": x.lo, "hi": x.hi })
}

pub fn f(x: f64) -> String {
    format!("{x:.17e}")
}

fn partial_path(p: &Path) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

/// Writes `body` next to `path` with a `.partial` suffix and renames it into
/// place once it is complete and flushed. Incomplete results keep the suffix.
pub fn emit(path: Option<&Path>, body: &str, complete: bool) -> io::Result<()> {
    match path {
        None => {
            let mut out = io::stdout().lock();
            out.write_all(body.as_bytes())?;
            out.flush()
        }
        Some(p) => {
            let tmp = partial_path(p);
            {
                let mut file = fs::File::create(&tmp)?;
                file.write_all(body.as_bytes())?;
                file.sync_all()?;
            }
            if complete {
                fs::rename(&tmp, p)?;
            } else {
                eprintln!("note: result incomplete, left at {}", tmp.display());
            }
            Ok(())
        }
    }
}
