// Intentionally empty: exists only so the openblas-build build-dependency in
// Cargo.toml participates in feature unification (see comment there).
fn main() {}
