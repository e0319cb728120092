#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

/// Small scenario and solver settings that train in about a second.
pub const SMALL_CONFIG: &str = "\
[scenario]
grid_spacing = 0.5

[solver]
iterations = 30
batch_size = 16
hidden = [8]
k_steps = 2

[run]
seeds = [1]
folds = 2
";

pub fn mibo(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mibo")).args(args).current_dir(cwd).output().expect("binary runs")
}

pub fn ok(args: &[&str], cwd: &Path) -> String {
    let out = mibo(args, cwd);
    assert!(
        out.status.success(),
        "mibo {args:?} failed: {}\n{}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("mibo.toml");
    fs::write(&path, text).unwrap();
    path
}

pub fn lines(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count()
}
