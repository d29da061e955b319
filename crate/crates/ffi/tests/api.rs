use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use mlc_ffi::*;

fn last_error() -> String {
    let p = mlc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn genus_two() -> *mut MlcMesh {
    let mut mesh = ptr::null_mut();
    assert_eq!(unsafe { mlc_mesh_generate(2, 0, &mut mesh) }, MlcStatus::Ok);
    mesh
}

#[test]
fn solve_round_trip() {
    let mesh = genus_two();
    unsafe {
        assert_eq!(mlc_mesh_euler_characteristic(mesh), -2);
        let nv = mlc_mesh_vertex_count(mesh);
        let tau = vec![0.05; nv];
        let mut sol = ptr::null_mut();
        assert_eq!(mlc_solve(mesh, ptr::null(), 0, tau.as_ptr(), nv, 1e-11, &mut sol), MlcStatus::Ok);
        assert!(mlc_last_error().is_null());
        let mut r = MlcReport::default();
        assert_eq!(mlc_solution_report(sol, &mut r), MlcStatus::Ok);
        assert!(r.area_identity_residual <= 1e-8 && r.cubic_norm_sq > 0.0);
        let mut u = vec![0.0; nv];
        assert_eq!(mlc_solution_factor(sol, u.as_mut_ptr(), nv), MlcStatus::Ok);
        assert!(u.iter().all(|x| x.is_finite()));
        let mut json = ptr::null_mut();
        assert_eq!(mlc_solution_report_json(sol, &mut json), MlcStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        mlc_string_free(json);
        let v: serde_json_free::Value = text.parse().unwrap();
        assert_eq!(v.area, r.area);
        mlc_solution_free(sol);
        mlc_mesh_free(mesh);
    }
}

/// Tiny reader for the one field compared above, to keep the crate free of
/// a JSON dependency.
mod serde_json_free {
    pub struct Value {
        pub area: f64,
    }
    impl std::str::FromStr for Value {
        type Err = String;
        fn from_str(s: &str) -> Result<Self, String> {
            let at = s.find("\"area\":").ok_or("no area")? + 7;
            let rest = s[at..].trim_start();
            let end = rest.find([',', '\n', '}']).ok_or("unterminated")?;
            Ok(Value {
                area: rest[..end].trim().parse().map_err(|e| format!("{e}"))?,
            })
        }
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut mesh = ptr::null_mut();
        let missing = CString::new("/nonexistent/mesh.off").unwrap();
        assert_eq!(mlc_mesh_load_off(missing.as_ptr(), &mut mesh), MlcStatus::Usage);
        assert!(last_error().contains("nonexistent"));
        assert!(mesh.is_null());

        let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/icosahedron.off");
        let path = CString::new(data.to_str().unwrap()).unwrap();
        assert_eq!(mlc_mesh_load_off(path.as_ptr(), &mut mesh), MlcStatus::Ok);
        let mut sol = ptr::null_mut();
        // Spacelike solves need negative Euler characteristic.
        assert_eq!(mlc_solve(mesh, ptr::null(), 0, ptr::null(), 0, 0.0, &mut sol), MlcStatus::Precondition);
        assert!(sol.is_null());
        let short = [1.0, 2.0];
        assert_eq!(mlc_solve(mesh, short.as_ptr(), 2, ptr::null(), 0, 0.0, &mut sol), MlcStatus::Precondition);
        assert_eq!(mlc_solve(mesh, ptr::null(), 5, ptr::null(), 0, 0.0, &mut sol), MlcStatus::NullPointer);
        mlc_mesh_free(mesh);

        assert_eq!(mlc_mesh_load_off(ptr::null(), &mut mesh), MlcStatus::NullPointer);
        assert_eq!(mlc_mesh_generate(2, 0, ptr::null_mut()), MlcStatus::NullPointer);
        assert_eq!(mlc_mesh_vertex_count(ptr::null()), 0);
        mlc_mesh_free(ptr::null_mut());
        mlc_solution_free(ptr::null_mut());
        mlc_string_free(ptr::null_mut());
    }
}

/// `libmlc_ffi.a` next to the test binary (`<target>/<profile>/deps`) or one
/// level up where cargo copies it for plain builds.
fn static_library() -> PathBuf {
    let deps = std::env::current_exe().unwrap().parent().unwrap().to_path_buf();
    let here = deps.join("libmlc_ffi.a");
    if here.exists() {
        here
    } else {
        deps.parent().unwrap().join("libmlc_ffi.a")
    }
}

#[test]
fn c_program_links_against_static_library() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = static_library();
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let exe = std::env::temp_dir().join(format!("mlc-ffi-smoke-{}", std::process::id()));
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-D_DEFAULT_SOURCE")
        .arg("-I")
        .arg(dir.join("include"))
        .arg(dir.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    let _ = std::fs::remove_file(&exe);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"minmax_value\""));
}
