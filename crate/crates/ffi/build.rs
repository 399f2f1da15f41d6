use std::env;
use std::path::PathBuf;

fn main() {
    // same link environment as the core crate: reference LAPACK/BLAS with a
    // transitive rpath, and an exported dynamic symbol table so the fast
    // dgemm interposer in the core crate is visible to liblapack
    let lapack_dir = "/usr/lib/x86_64-linux-gnu/lapack";
    let blas_dir = "/usr/lib/x86_64-linux-gnu/blas";
    println!("cargo:rustc-link-arg=-Wl,--disable-new-dtags");
    println!("cargo:rustc-link-arg=-Wl,-rpath,{lapack_dir}:{blas_dir}");
    println!("cargo:rustc-link-arg=-Wl,--export-dynamic");

    // generate the C header
    let crate_dir = env::var("CARGO_MANIFEST_DIR").unwrap();
    let header = PathBuf::from(&crate_dir).join("include/resmin.h");
    std::fs::create_dir_all(header.parent().unwrap()).unwrap();
    match cbindgen::generate(&crate_dir) {
        Ok(bindings) => {
            bindings.write_to_file(&header);
        }
        Err(e) => {
            // header generation failures should fail the build loudly rather
            // than ship a stale header
            panic!("cbindgen failed: {e}");
        }
    }
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
}
