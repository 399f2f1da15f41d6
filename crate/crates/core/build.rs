fn main() {
    // Dense kernels (LU, SVD, least squares) call the *reference* netlib
    // LAPACK/BLAS. The OpenBLAS alternative that usually shadows these is
    // avoided deliberately: its runtime CPU dispatcher falls back to a
    // miscompiled kernel path on unrecognized CPUs (wrong dtrsm results,
    // out-of-bounds writes), which silently corrupts LU solves. Reference
    // BLAS is slow at level 3, so linalg.rs interposes a fast pure-Rust
    // dgemm_ over it; everything else runs netlib code.
    //
    // --disable-new-dtags emits transitive DT_RPATH so liblapack's own
    // libblas.so.3 dependency also resolves to the reference library
    // instead of the broken system alternative. --export-dynamic puts the
    // interposed dgemm_ into the dynamic symbol table where liblapack's
    // calls can bind to it.
    let lapack_dir = "/usr/lib/x86_64-linux-gnu/lapack";
    let blas_dir = "/usr/lib/x86_64-linux-gnu/blas";
    println!("cargo:rustc-link-search=native={lapack_dir}");
    println!("cargo:rustc-link-search=native={blas_dir}");
    println!("cargo:rustc-link-lib=dylib=lapack");
    println!("cargo:rustc-link-lib=dylib=blas");
    println!("cargo:rustc-link-arg=-Wl,--disable-new-dtags");
    println!("cargo:rustc-link-arg=-Wl,-rpath,{lapack_dir}:{blas_dir}");
    println!("cargo:rustc-link-arg=-Wl,--export-dynamic");
}
