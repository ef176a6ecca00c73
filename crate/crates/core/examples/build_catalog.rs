//! Regenerate the shipped placeholder catalog under `data/catalog`.

fn main() {
    let dir = std::env::args().nth(1).map(std::path::PathBuf::from).unwrap_or_else(|| toonforge_core::default_data_dir().join("catalog"));
    if let Err(e) = toonforge_core::catalog::builtin::write_default_catalog(&dir) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
    println!("wrote {}", dir.display());
}
