//! Delimited-text and legacy VTK exports. Floats are written with 17
//! significant digits so that values round-trip.

use std::fmt::Write as _;
use std::path::Path;

use crate::continuation::BranchPoint;
use crate::error::{Error, Result};
use crate::material::{classify_variant, psi_dev, MaterialParams3D, PointState3D, Variant};
use crate::spline::FieldCoefficients;

/// Deviatoric energy levels drawn in the strain-space contour export.
pub const CONTOUR_LEVELS: [f64; 4] = [0.0, -0.2, -0.5, -0.9];

pub fn fmt(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

fn write(path: &Path, text: String) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

/// `b5,l,energy,min_eig,stable,residual_norm,iterations`, one row per point.
pub fn energy_curve_csv(points: &[BranchPoint]) -> String {
    let mut s = String::from("b5,l,energy,min_eig,stable,residual_norm,iterations\n");
    for p in points {
        let stable = p.stable.map(|b| b.to_string()).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            opt(p.b5),
            fmt(p.l),
            fmt(p.energy),
            opt(p.min_eig()),
            stable,
            fmt(p.report.residual_norm),
            p.report.iterations
        );
    }
    s
}

pub fn write_energy_curve(path: &Path, points: &[BranchPoint]) -> Result<()> {
    write(path, energy_curve_csv(points))
}

fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample1D {
    pub x: f64,
    pub u: f64,
    pub u_x: f64,
}

pub fn sample_1d(coeffs: &FieldCoefficients, n: usize) -> Result<Vec<Sample1D>> {
    if coeffs.space.dim() != 1 || n < 2 {
        return Err(Error::InvalidParameter("1D sampling needs a 1D field and n ≥ 2".into()));
    }
    grid(n)
        .into_iter()
        .map(|x| {
            let v = coeffs.evaluate(&[x])?;
            Ok(Sample1D { x, u: v.value[0], u_x: v.grad[0][0] })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample3D {
    pub x: [f64; 3],
    pub u: [f64; 3],
    pub e: [f64; 6],
    pub psi_dev: f64,
    pub variant: Variant,
}

/// Samples on the uniform `n³` grid, `X1` fastest.
pub fn sample_3d(coeffs: &FieldCoefficients, params: &MaterialParams3D, n: usize) -> Result<Vec<Sample3D>> {
    if coeffs.space.dim() != 3 || coeffs.space.components() != 3 || n < 2 {
        return Err(Error::InvalidParameter("3D sampling needs a 3D vector field and n ≥ 2".into()));
    }
    let g = grid(n);
    let mut out = Vec::with_capacity(n * n * n);
    for &z in &g {
        for &y in &g {
            for &x in &g {
                let v = coeffs.evaluate(&[x, y, z])?;
                let grad_u = [v.grad[0], v.grad[1], v.grad[2]];
                let st = PointState3D::from_displacement(&grad_u, &[[[0.0; 3]; 3]; 3]);
                out.push(Sample3D {
                    x: [x, y, z],
                    u: [v.value[0], v.value[1], v.value[2]],
                    e: st.e,
                    psi_dev: psi_dev(st.e[1], st.e[2], params),
                    variant: classify_variant(st.e[1], st.e[2], params),
                });
            }
        }
    }
    Ok(out)
}

/// Number of samples carrying each label, indexed by `Variant::label`.
pub fn variant_counts(samples: &[Sample3D]) -> [usize; 4] {
    let mut c = [0; 4];
    for s in samples {
        c[s.variant.label() as usize] += 1;
    }
    c
}

pub fn field_csv_1d(samples: &[Sample1D]) -> String {
    let mut s = String::from("x,u,u_x\n");
    for p in samples {
        let _ = writeln!(s, "{},{},{}", fmt(p.x), fmt(p.u), fmt(p.u_x));
    }
    s
}

pub fn field_csv_3d(samples: &[Sample3D]) -> String {
    let mut s = String::from("x1,x2,x3,u1,u2,u3,e1,e2,e3,e4,e5,e6,psi_dev,variant,y1,y2,y3\n");
    for p in samples {
        let cols: Vec<String> = p
            .x
            .iter()
            .chain(&p.u)
            .chain(&p.e)
            .chain(std::iter::once(&p.psi_dev))
            .map(|v| fmt(*v))
            .collect();
        let y: Vec<String> = (0..3).map(|i| fmt(p.x[i] + p.u[i])).collect();
        let _ = writeln!(s, "{},{},{}", cols.join(","), p.variant.label(), y.join(","));
    }
    s
}

fn vtk_scalars(s: &mut String, name: &str, kind: &str, values: impl Iterator<Item = String>) {
    let _ = writeln!(s, "SCALARS {name} {kind} 1\nLOOKUP_TABLE default");
    for v in values {
        let _ = writeln!(s, "{v}");
    }
}

/// Legacy structured grid over the line, `u` and `u_x` as point data.
pub fn field_vtk_1d(samples: &[Sample1D]) -> String {
    let mut s = format!(
        "# vtk DataFile Version 3.0\n1D displacement field\nASCII\nDATASET STRUCTURED_GRID\nDIMENSIONS {} 1 1\nPOINTS {} double\n",
        samples.len(),
        samples.len()
    );
    for p in samples {
        let _ = writeln!(s, "{} 0 0", fmt(p.x));
    }
    let _ = writeln!(s, "POINT_DATA {}", samples.len());
    vtk_scalars(&mut s, "u", "double", samples.iter().map(|p| fmt(p.u)));
    vtk_scalars(&mut s, "u_x", "double", samples.iter().map(|p| fmt(p.u_x)));
    s
}

/// Legacy structured grid on the deformed points `X + u`.
pub fn field_vtk_3d(samples: &[Sample3D], n: usize) -> String {
    let mut s = format!(
        "# vtk DataFile Version 3.0\n3D displacement field\nASCII\nDATASET STRUCTURED_GRID\nDIMENSIONS {n} {n} {n}\nPOINTS {} double\n",
        samples.len()
    );
    for p in samples {
        let _ = writeln!(s, "{} {} {}", fmt(p.x[0] + p.u[0]), fmt(p.x[1] + p.u[1]), fmt(p.x[2] + p.u[2]));
    }
    let _ = writeln!(s, "POINT_DATA {}\nVECTORS displacement double", samples.len());
    for p in samples {
        let _ = writeln!(s, "{} {} {}", fmt(p.u[0]), fmt(p.u[1]), fmt(p.u[2]));
    }
    for i in 0..6 {
        vtk_scalars(&mut s, &format!("e{}", i + 1), "double", samples.iter().map(|p| fmt(p.e[i])));
    }
    vtk_scalars(&mut s, "psi_dev", "double", samples.iter().map(|p| fmt(p.psi_dev)));
    vtk_scalars(&mut s, "variant", "int", samples.iter().map(|p| p.variant.label().to_string()));
    s
}

pub fn strain_scatter_csv(samples: &[Sample3D]) -> String {
    let mut s = String::from("e2,e3,psi_dev,variant\n");
    for p in samples {
        let _ = writeln!(s, "{},{},{},{}", fmt(p.e[1]), fmt(p.e[2]), fmt(p.psi_dev), p.variant.label());
    }
    s
}

/// Line segment of a level set in the `(e2, e3)` plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub level: f64,
    pub a: [f64; 2],
    pub b: [f64; 2],
}

/// Level sets of `Ψ_dev` over `[-half, half]²` by marching squares on a
/// `res × res` cell grid. Ambiguous saddle cells are split by the centre value.
pub fn deviatoric_contours(params: &MaterialParams3D, levels: &[f64], half: f64, res: usize) -> Vec<Segment> {
    let h = 2.0 * half / res as f64;
    let coord = |i: usize| -half + i as f64 * h;
    let vals: Vec<Vec<f64>> =
        (0..=res).map(|i| (0..=res).map(|j| psi_dev(coord(i), coord(j), params)).collect()).collect();
    let mut out = Vec::new();
    for &level in levels {
        for i in 0..res {
            for j in 0..res {
                // corners counter-clockwise in (e2, e3)
                let c = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
                let f: Vec<f64> = c.iter().map(|&(a, b)| vals[a][b] - level).collect();
                let cross = |k: usize| -> Option<[f64; 2]> {
                    let (p, q) = (k, (k + 1) % 4);
                    if (f[p] < 0.0) == (f[q] < 0.0) {
                        return None;
                    }
                    let t = f[p] / (f[p] - f[q]);
                    let pa = [coord(c[p].0), coord(c[p].1)];
                    let pb = [coord(c[q].0), coord(c[q].1)];
                    Some([pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])])
                };
                let pts: Vec<(usize, [f64; 2])> = (0..4).filter_map(|k| cross(k).map(|p| (k, p))).collect();
                match pts.len() {
                    2 => out.push(Segment { level, a: pts[0].1, b: pts[1].1 }),
                    4 => {
                        let centre = psi_dev(coord(i) + 0.5 * h, coord(j) + 0.5 * h, params) - level;
                        let (first, second) = if (centre < 0.0) == (f[0] < 0.0) { ((0, 1), (2, 3)) } else { ((0, 3), (1, 2)) };
                        out.push(Segment { level, a: pts[first.0].1, b: pts[first.1].1 });
                        out.push(Segment { level, a: pts[second.0].1, b: pts[second.1].1 });
                    }
                    _ => {}
                }
            }
        }
    }
    out
}

pub fn contours_csv(segments: &[Segment]) -> String {
    let mut s = String::from("level,e2_a,e3_a,e2_b,e3_b\n");
    for g in segments {
        let _ = writeln!(s, "{},{},{},{},{}", fmt(g.level), fmt(g.a[0]), fmt(g.a[1]), fmt(g.b[0]), fmt(g.b[1]));
    }
    s
}

/// Field exports of one state into `dir`, named `<stem>_*`. Returns the
/// written file names.
pub fn export_fields(
    dir: &Path,
    stem: &str,
    coeffs: &FieldCoefficients,
    params3d: Option<&MaterialParams3D>,
    n: usize,
    scatter: bool,
) -> Result<Vec<String>> {
    let mut written = Vec::new();
    let mut emit = |name: String, text: String| -> Result<()> {
        write(&dir.join(&name), text)?;
        written.push(name);
        Ok(())
    };
    match params3d {
        None => {
            let s = sample_1d(coeffs, n)?;
            emit(format!("{stem}_field.csv"), field_csv_1d(&s))?;
            emit(format!("{stem}_field.vtk"), field_vtk_1d(&s))?;
        }
        Some(p) => {
            let s = sample_3d(coeffs, p, n)?;
            emit(format!("{stem}_field.csv"), field_csv_3d(&s))?;
            emit(format!("{stem}_field.vtk"), field_vtk_3d(&s, n))?;
            if scatter {
                emit(format!("{stem}_strain_scatter.csv"), strain_scatter_csv(&s))?;
                let half = 2.0 * p.r;
                emit(format!("{stem}_psi_dev_contours.csv"), contours_csv(&deviatoric_contours(p, &CONTOUR_LEVELS, half, 200)))?;
            }
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spline::SplineSpace;

    #[test]
    fn seventeen_digits() {
        let s = fmt(0.1);
        assert_eq!(s.parse::<f64>().unwrap(), 0.1);
        assert_eq!(s, "1.0000000000000001e-1");
        assert_eq!(fmt(-1.0 / 3.0).parse::<f64>().unwrap(), -1.0 / 3.0);
    }

    #[test]
    fn zero_field_has_no_variants() {
        let space = SplineSpace::new(3, 2, 2, 3).unwrap();
        let p = MaterialParams3D::from_b5(180.0, 0.25, 0.1).unwrap();
        let s = sample_3d(&FieldCoefficients::zeros(&space), &p, 5).unwrap();
        assert_eq!(s.len(), 125);
        assert!(s.iter().all(|q| q.e.iter().all(|e| *e == 0.0) && q.variant == Variant::None));
        assert_eq!(variant_counts(&s), [125, 0, 0, 0]);
    }

    #[test]
    fn contour_points_lie_on_levels() {
        let p = MaterialParams3D::from_b5(180.0, 0.25, 0.1).unwrap();
        let segs = deviatoric_contours(&p, &CONTOUR_LEVELS, 0.5, 100);
        for level in CONTOUR_LEVELS {
            assert!(segs.iter().any(|s| s.level == level));
        }
        for s in &segs {
            for q in [s.a, s.b] {
                // linear interpolation error is O(h²) times the curvature
                assert!((psi_dev(q[0], q[1], &p) - s.level).abs() < 0.05, "{s:?}");
            }
        }
    }
}
