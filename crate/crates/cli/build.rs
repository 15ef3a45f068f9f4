// Content hash of the library and tool sources, embedded in every output.
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

fn collect(dir: &Path, out: &mut Vec<PathBuf>) {
    let Ok(entries) = fs::read_dir(dir) else { return };
    for e in entries.flatten() {
        let p = e.path();
        if p.is_dir() {
            collect(&p, out);
        } else if p.extension().is_some_and(|x| x == "rs" || x == "toml") {
            out.push(p);
        }
    }
}

fn main() {
    let here = PathBuf::from(std::env::var("CARGO_MANIFEST_DIR").unwrap());
    let roots = [here.join("src"), here.join("build.rs"), here.join("Cargo.toml"), here.join("../core/src"), here.join("../core/Cargo.toml")];
    let mut files = Vec::new();
    for r in &roots {
        if r.is_dir() {
            collect(r, &mut files);
        } else {
            files.push(r.clone());
        }
        println!("cargo:rerun-if-changed={}", r.display());
    }
    files.sort();
    let mut h = Sha256::new();
    for f in &files {
        let rel = f.strip_prefix(&here).unwrap_or(f);
        h.update(rel.to_string_lossy().as_bytes());
        h.update(fs::read(f).unwrap_or_default());
    }
    let digest: String = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
    println!("cargo:rustc-env=ENP_CODE_HASH={}", &digest[..16]);
}
