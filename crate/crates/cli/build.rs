fn main() {
    for key in ["PROFILE", "TARGET"] {
        let v = std::env::var(key).unwrap_or_else(|_| "unknown".into());
        println!("cargo:rustc-env=CGM_BUILD_{key}={v}");
    }
    println!("cargo:rerun-if-changed=build.rs");
}
