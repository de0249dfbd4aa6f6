//! Writes a synthetic invoice and its ground-truth sidecar.
//!
//! `cargo run --example gen_fixture -- <out.png> [seed] [ruled|borderless|freetext] [items] [distort]`

use std::path::PathBuf;

use invextract::raster::write_png;
use invextract::synthfix::{generate, Distortion, FixtureSpec, HeaderStyle};

fn main() -> invextract::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let out = PathBuf::from(args.first().map(String::as_str).unwrap_or("fixture.png"));
    let seed = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let style = match args.get(2).map(String::as_str) {
        Some("borderless") => HeaderStyle::BorderlessAligned,
        Some("freetext") => HeaderStyle::FreeText,
        _ => HeaderStyle::Ruled,
    };
    let items = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(5);
    let mut spec = FixtureSpec::new(seed, style, items);
    spec.wrap_probability = 0.3;
    if args.get(4).is_some_and(|s| s == "distort") {
        spec.distortion = Distortion::bundle(seed, spec.page_width, spec.page_height);
    }
    let (img, truth) = generate(&spec)?;
    write_png(&img, &out)?;
    let sidecar = truth.write_sidecar(&out)?;
    println!("{} + {}", out.display(), sidecar.display());
    Ok(())
}
