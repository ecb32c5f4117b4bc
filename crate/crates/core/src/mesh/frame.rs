use super::{point_set_diameter, Point3, Vec3};

/// Orthonormal in-plane frame of a planar face, centred at its centroid.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceFrame {
    pub origin: Point3,
    pub axes: [Vec3; 2],
    /// Unit normal following the right-hand rule of the face cycle.
    pub normal: Vec3,
    pub diameter: f64,
    pub area: f64,
}

impl FaceFrame {
    pub fn new(cycle: &[usize], vertices: &[Point3]) -> Self {
        let pts: Vec<Point3> = cycle.iter().map(|&v| vertices[v]).collect();
        let n = pts.len();
        let mean = Point3::from(pts.iter().map(|p| p.coords).sum::<Vec3>() / n as f64);

        // Newell normal about the vertex mean.
        let mut newell = Vec3::zeros();
        for j in 0..n {
            newell += (pts[j] - mean).cross(&(pts[(j + 1) % n] - mean));
        }
        let twice_area = newell.norm();
        let normal = if twice_area > 0.0 {
            newell / twice_area
        } else {
            Vec3::z()
        };

        let mut area = 0.0;
        let mut moment = Vec3::zeros();
        for j in 0..n {
            let (a, b) = (pts[j], pts[(j + 1) % n]);
            let t = 0.5 * (a - mean).cross(&(b - mean)).dot(&normal);
            area += t;
            moment += t * (mean.coords + a.coords + b.coords) / 3.0;
        }
        let origin = if area != 0.0 {
            Point3::from(moment / area)
        } else {
            mean
        };

        let first = pts[1] - pts[0];
        let in_plane = first - first.dot(&normal) * normal;
        let axis0 = if in_plane.norm() > 0.0 {
            in_plane.normalize()
        } else {
            normal.cross(&Vec3::x()).try_normalize(0.0).unwrap_or(Vec3::y())
        };
        let axis1 = normal.cross(&axis0);

        Self {
            origin,
            axes: [axis0, axis1],
            normal,
            diameter: point_set_diameter(pts.iter()),
            area,
        }
    }

    pub fn to_local(&self, p: &Point3) -> [f64; 2] {
        let d = p - self.origin;
        [d.dot(&self.axes[0]), d.dot(&self.axes[1])]
    }

    pub fn to_global(&self, q: &[f64; 2]) -> Point3 {
        self.origin + q[0] * self.axes[0] + q[1] * self.axes[1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unit_square_frame() {
        let v = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ];
        let f = FaceFrame::new(&[0, 1, 2, 3], &v);
        assert!((f.area - 1.0).abs() < 1e-15);
        assert!((f.origin - Point3::new(0.5, 0.5, 0.0)).norm() < 1e-15);
        assert!((f.normal - Vec3::z()).norm() < 1e-15);
        assert!((f.diameter - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(f.to_local(&f.origin), [0.0, 0.0]);
    }

    proptest! {
        #[test]
        fn frame_is_orthonormal_and_round_trips(
            angle in 0.0..std::f64::consts::TAU,
            tilt in 0.0..std::f64::consts::PI,
            shift in (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64),
            scale in 0.01..10.0f64,
        ) {
            // Regular pentagon in a rotated, scaled, translated plane.
            let (sa, ca) = angle.sin_cos();
            let (st, ct) = tilt.sin_cos();
            let u = Vec3::new(ca, sa, 0.0);
            let w = Vec3::new(-sa * ct, ca * ct, st);
            let base = Point3::new(shift.0, shift.1, shift.2);
            let pts: Vec<Point3> = (0..5)
                .map(|i| {
                    let t = 2.0 * std::f64::consts::PI * i as f64 / 5.0;
                    base + scale * (t.cos() * u + t.sin() * w)
                })
                .collect();
            let f = FaceFrame::new(&[0, 1, 2, 3, 4], &pts);
            prop_assert!((f.axes[0].norm() - 1.0).abs() < 1e-14);
            prop_assert!((f.axes[1].norm() - 1.0).abs() < 1e-14);
            prop_assert!(f.axes[0].dot(&f.axes[1]).abs() < 1e-14);
            prop_assert!((f.normal - f.axes[0].cross(&f.axes[1])).norm() < 1e-14);
            for p in &pts {
                let back = f.to_global(&f.to_local(p));
                prop_assert!((back - p).norm() <= 1e-13 * f.diameter.max(1.0));
            }
        }
    }
}
