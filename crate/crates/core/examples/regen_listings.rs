//! Rewrites `fixtures/listings160.json` from the seeded generator.

use critique_core::fixtures::generate_listings;

fn main() -> critique_core::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/listings160.json");
    let mut text = serde_json::to_string_pretty(&generate_listings(160, 2004).to_json())?;
    text.push('\n');
    std::fs::write(path, text)?;
    println!("wrote {path}");
    Ok(())
}
