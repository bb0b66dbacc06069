/// Counter-clockwise convex hull by Andrew's monotone chain.
///
/// Starts at the lexicographically smallest point. Collinear boundary
/// points are dropped; a single distinct point or a segment comes back as
/// one or two vertices.
pub fn hull_2d(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        push_turning(&mut hull, 0, p);
    }
    let lower = hull.len() - 1;
    for &p in pts.iter().rev().skip(1) {
        push_turning(&mut hull, lower, p);
    }
    hull.pop();
    hull
}

fn push_turning(hull: &mut Vec<[f64; 2]>, floor: usize, p: [f64; 2]) {
    while hull.len() >= floor + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
        hull.pop();
    }
    hull.push(p);
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}
