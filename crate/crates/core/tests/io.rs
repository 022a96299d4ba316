use skelcover::geometry::{PointCloud, Vec3};
use skelcover::io::{load_cloud, save_ply, CloudFormat};
use skelcover::Error;
use std::io::Write;

fn write(dir: &std::path::Path, name: &str, bytes: &[u8]) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::File::create(&p).unwrap().write_all(bytes).unwrap();
    p
}

#[test]
fn xyz_three_lines() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "c.xyz", b"0 0 0\n1 2 3\n# note\n\n-1.5 2e-3 7\n");
    let c = load_cloud(&p, CloudFormat::Auto).unwrap();
    assert_eq!(c.len(), 3);
    assert!(c.normals.is_none());
    assert_eq!(c.points[2], Vec3::new(-1.5, 0.002, 7.0));
}

#[test]
fn ascii_ply_normals_are_unit_length() {
    let dir = tempfile::tempdir().unwrap();
    let text = "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\n\
                property float nx\nproperty float ny\nproperty float nz\nend_header\n0 0 0 0 0 2\n1 1 1 3 4 0\n";
    let c = load_cloud(&write(dir.path(), "c.ply", text.as_bytes()), CloudFormat::Auto).unwrap();
    let n = c.normals.as_ref().unwrap();
    for v in n {
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }
    assert!((n[1] - Vec3::new(0.6, 0.8, 0.0)).norm() < 1e-7);
}

#[test]
fn binary_ply_round_trip_is_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let pts: Vec<Vec3> = (0..257).map(|i| Vec3::new(i as f64 * 0.1 + 1e-13, (i as f64).sqrt(), -(i as f64) / 3.0)).collect();
    let cloud = PointCloud::new(pts.clone());
    let p = dir.path().join("rt.ply");
    save_ply(&cloud, &p, true).unwrap();
    let back = load_cloud(&p, CloudFormat::Ply).unwrap();
    assert_eq!(back.len(), pts.len());
    for (a, b) in pts.iter().zip(&back.points) {
        for k in 0..3 {
            assert_eq!(a[k].to_bits(), b[k].to_bits());
        }
    }
}

#[test]
fn pcd_with_normals() {
    let dir = tempfile::tempdir().unwrap();
    let text = "# .PCD v0.7\nVERSION 0.7\nFIELDS x y z normal_x normal_y normal_z\nSIZE 4 4 4 4 4 4\nTYPE F F F F F F\n\
                COUNT 1 1 1 1 1 1\nWIDTH 2\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS 2\nDATA ascii\n1 2 3 0 0 5\n4 5 6 1 0 0\n";
    let c = load_cloud(&write(dir.path(), "c.pcd", text.as_bytes()), CloudFormat::Auto).unwrap();
    assert_eq!(c.len(), 2);
    assert_eq!(c.normals.unwrap()[0], Vec3::z());
}

#[test]
fn bad_input_reports_where() {
    let dir = tempfile::tempdir().unwrap();
    let nan = write(dir.path(), "nan.xyz", b"0 0 0\n1 nan 0\n");
    match load_cloud(&nan, CloudFormat::Auto) {
        Err(Error::Parse { location, .. }) => assert_eq!(location, "line 2"),
        other => panic!("{other:?}"),
    }
    let empty = write(dir.path(), "empty.xyz", b"# nothing\n");
    assert!(load_cloud(&empty, CloudFormat::Auto).unwrap_err().is_validation());
    let header = write(dir.path(), "h.ply", b"ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nend_header\n0\n");
    assert!(load_cloud(&header, CloudFormat::Auto).is_err());
}
