use std::collections::HashMap;
use std::fs;

use shapeopt::geometry::{BoundaryCurve, Mesh};
use shapeopt::io::write_vtk;

/// Minimal legacy-VTK reader, written against the file format rather than
/// the writer.
struct Vtk {
    points: Vec<[f64; 3]>,
    cells: Vec<Vec<usize>>,
    cell_types: Vec<u8>,
    point_data: HashMap<String, Vec<f64>>,
    cell_data: HashMap<String, Vec<f64>>,
}

fn parse(text: &str) -> Vtk {
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# vtk DataFile Version"));
    lines.next();
    assert_eq!(lines.next().unwrap().trim(), "ASCII");
    assert_eq!(lines.next().unwrap().trim(), "DATASET UNSTRUCTURED_GRID");
    let mut toks = lines.flat_map(str::split_whitespace).peekable();
    let mut vtk = Vtk {
        points: Vec::new(),
        cells: Vec::new(),
        cell_types: Vec::new(),
        point_data: HashMap::new(),
        cell_data: HashMap::new(),
    };
    let mut section_len = 0;
    let mut in_points = true;
    while let Some(key) = toks.next() {
        let mut next = || toks.next().expect("truncated file");
        match key {
            "POINTS" => {
                let n: usize = next().parse().unwrap();
                next();
                for _ in 0..n {
                    vtk.points.push([next(), next(), next()].map(|s| s.parse::<f64>().unwrap()));
                }
            }
            "CELLS" => {
                let n: usize = next().parse().unwrap();
                next();
                for _ in 0..n {
                    let k: usize = next().parse().unwrap();
                    vtk.cells.push((0..k).map(|_| next().parse().unwrap()).collect());
                }
            }
            "CELL_TYPES" => {
                let n: usize = next().parse().unwrap();
                vtk.cell_types = (0..n).map(|_| next().parse().unwrap()).collect();
            }
            "CELL_DATA" | "POINT_DATA" => {
                section_len = next().parse().unwrap();
                in_points = key == "POINT_DATA";
            }
            "SCALARS" => {
                let name = next().to_string();
                next();
                next();
                assert_eq!(next(), "LOOKUP_TABLE");
                next();
                let vals = (0..section_len).map(|_| next().parse().unwrap()).collect();
                if in_points {
                    vtk.point_data.insert(name, vals);
                } else {
                    vtk.cell_data.insert(name, vals);
                }
            }
            other => panic!("unexpected token {other}"),
        }
    }
    vtk
}

fn read(path: &std::path::Path) -> Vtk {
    parse(&fs::read_to_string(path).unwrap())
}

#[test]
fn unit_square_constant_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.vtk");
    let mesh = Mesh::build(&BoundaryCurve::flat(2), 0.5).unwrap();
    let ones = vec![1.0; mesh.n_vertices()];
    write_vtk(&path, &mesh, &[("T".into(), ones)]).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.contains("POINT_DATA"));
    let v = read(&path);
    assert_eq!(v.points.len(), mesh.n_vertices());
    assert!(v.point_data["T"].iter().all(|&x| x == 1.0));
    assert_eq!(v.cells.len(), mesh.n_triangles());
    assert!(v.cell_types.iter().all(|&t| t == 5));
}

#[test]
fn coordinates_survive_to_full_precision() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.vtk");
    let curve = BoundaryCurve::from_fn(13, |x| -0.1 * (5.0 * std::f64::consts::PI * x).sin() * (-3.0 * x).exp()).unwrap();
    let mesh = Mesh::build(&curve, 1.0 / 13.0).unwrap();
    let field: Vec<f64> = mesh.vertices.iter().map(|p| p[0].exp() * p[1].sin()).collect();
    write_vtk(&path, &mesh, &[("f".into(), field.clone()), ("g".into(), vec![0.1; mesh.n_vertices()])]).unwrap();
    let v = read(&path);
    for (p, q) in v.points.iter().zip(&mesh.vertices) {
        assert_eq!((p[0], p[1], p[2]), (q[0], q[1], 0.0));
    }
    assert_eq!(v.point_data["f"], field);
    for (c, t) in v.cells.iter().zip(&mesh.triangles) {
        assert_eq!(c.as_slice(), t.as_slice());
    }
    let tags: Vec<f64> = mesh.region_tags().iter().map(|&r| r as f64).collect();
    assert_eq!(v.cell_data["region"], tags);
    // deterministic bytes
    let again = dir.path().join("w2.vtk");
    write_vtk(&again, &mesh, &[("f".into(), field), ("g".into(), vec![0.1; mesh.n_vertices()])]).unwrap();
    assert_eq!(fs::read(&path).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn rejects_mismatched_field() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = Mesh::build(&BoundaryCurve::flat(2), 0.5).unwrap();
    assert!(write_vtk(&dir.path().join("x.vtk"), &mesh, &[("T".into(), vec![1.0; 3])]).is_err());
    assert!(write_vtk(&dir.path().join("x.vtk"), &mesh, &[("a b".into(), vec![1.0; mesh.n_vertices()])]).is_err());
    let err = write_vtk(std::path::Path::new("/nonexistent/dir/x.vtk"), &mesh, &[]).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/dir/x.vtk"));
}
