use crate::centerline::{resample_arclength, CenterlineSet, RibLabel, Side};
use crate::tracer::TraceParams;
use crate::volgrid::{ProbabilityMap, FIRST_RIB, INTERMEDIATE_RIB, TWELFTH_RIB};

/// Fills class scores and assigns anatomical labels per side, counting
/// from an identified first or twelfth rib.
pub fn label_ribs(mut lines: CenterlineSet, prob: &ProbabilityMap, params: &TraceParams) -> CenterlineSet {
    for rib in &mut lines.ribs {
        let points = resample_arclength(&rib.points, 1.0).unwrap_or_else(|_| rib.points.clone());
        let n = points.len() as f64;
        let mut scores = [0.0; 3];
        for (score, c) in scores.iter_mut().zip([FIRST_RIB, TWELFTH_RIB, INTERMEDIATE_RIB]) {
            *score = points.iter().map(|p| prob.channel(c).sample_trilinear(*p)).sum::<f64>() / n;
        }
        rib.class_scores = Some(scores);
        rib.label = RibLabel::Unlabeled;
    }

    for side in [Side::Left, Side::Right] {
        let mut idx: Vec<usize> = (0..lines.ribs.len()).filter(|&i| lines.ribs[i].side == side).collect();
        idx.sort_by(|&a, &b| lines.ribs[a].mean_z().total_cmp(&lines.ribs[b].mean_z()).then(a.cmp(&b)));
        let n = idx.len();
        if n == 0 {
            continue;
        }
        let score = |i: usize, c: usize| lines.ribs[idx[i]].class_scores.expect("filled")[c];
        // position 0 is the lowest rib
        let index_of: Box<dyn Fn(usize) -> i64> = if score(n - 1, 0) > params.label_score_threshold {
            Box::new(move |pos| (n - pos) as i64)
        } else if score(0, 1) > params.label_score_threshold || n == 12 {
            Box::new(|pos| 12 - pos as i64)
        } else {
            continue;
        };
        for (pos, &i) in idx.iter().enumerate() {
            let label = u8::try_from(index_of(pos)).ok().and_then(|k| RibLabel::rib(k, side));
            lines.ribs[i].label = label.unwrap_or(RibLabel::Unlabeled);
        }
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::centerline::RibCenterline;
    use crate::geom::Vec3;
    use crate::volgrid::{Geometry, VoxelGrid};

    /// `n` straight ribs per side at z = 10, 20, ...; channel values set
    /// per slab so that the top rib scores `first` and the bottom `twelfth`.
    fn setup(n: usize, first: f32, twelfth: f32) -> (CenterlineSet, ProbabilityMap) {
        let nz = 10 * n + 20;
        let g = Geometry::new([30, 4, nz], Vec3::new(1.0, 1.0, 1.0), Vec3::ZERO).unwrap();
        let mut ch: [VoxelGrid; 4] = std::array::from_fn(|_| VoxelGrid::filled(g, 0.0));
        let mut ribs = Vec::new();
        for r in 0..n {
            let z = 10.0 * (r + 1) as f64;
            for (x0, side) in [(2.0, Side::Left), (16.0, Side::Right)] {
                let pts = vec![Vec3::new(x0, 2.0, z), Vec3::new(x0 + 10.0, 2.0, z)];
                ribs.push(RibCenterline::new(pts, RibLabel::Unlabeled, side).unwrap());
            }
            let (c, v) = if r == n - 1 {
                (FIRST_RIB, first)
            } else if r == 0 {
                (TWELFTH_RIB, twelfth)
            } else {
                (INTERMEDIATE_RIB, 1.0)
            };
            for k in (10 * (r + 1) - 2)..=(10 * (r + 1) + 2) {
                for j in 0..4 {
                    for i in 0..30 {
                        ch[c].set(i, j, k, v);
                        ch[INTERMEDIATE_RIB].set(i, j, k, if c == INTERMEDIATE_RIB { 1.0 } else { 1.0 - v });
                    }
                }
            }
        }
        (CenterlineSet::new("t", ribs), ProbabilityMap::new(ch).unwrap())
    }

    fn labels(set: &CenterlineSet, side: Side) -> Vec<String> {
        let mut ribs: Vec<_> = set.ribs.iter().filter(|r| r.side == side).collect();
        ribs.sort_by(|a, b| b.first().z.total_cmp(&a.first().z));
        ribs.iter().map(|r| r.label.to_string()).collect()
    }

    #[test]
    fn full_cage() {
        let (set, prob) = setup(12, 0.9, 0.9);
        let out = label_ribs(set, &prob, &TraceParams::default());
        let expect: Vec<String> = (1..=12).map(|i| format!("{i:02}l")).collect();
        assert_eq!(labels(&out, Side::Left), expect);
        assert_eq!(labels(&out, Side::Right)[11], "12r");
    }

    #[test]
    fn first_rib_anchoring_with_nine_ribs() {
        let (set, prob) = setup(9, 0.9, 0.0);
        let out = label_ribs(set, &prob, &TraceParams::default());
        let expect: Vec<String> = (1..=9).map(|i| format!("{i:02}r")).collect();
        assert_eq!(labels(&out, Side::Right), expect);
        let s = out.ribs.iter().find(|r| r.label.to_string() == "01l").unwrap().class_scores.unwrap();
        assert!((s[0] - 0.9).abs() < 1e-6);
    }

    #[test]
    fn twelfth_rib_anchoring_with_nine_ribs() {
        let (set, prob) = setup(9, 0.0, 0.9);
        let out = label_ribs(set, &prob, &TraceParams::default());
        let expect: Vec<String> = (4..=12).map(|i| format!("{i:02}l")).collect();
        assert_eq!(labels(&out, Side::Left), expect);
    }

    #[test]
    fn no_anchor_leaves_ribs_unlabeled() {
        let (set, prob) = setup(9, 0.0, 0.0);
        let out = label_ribs(set, &prob, &TraceParams::default());
        assert!(out.ribs.iter().all(|r| r.label == RibLabel::Unlabeled));
    }

    #[test]
    fn twelve_ribs_without_anchor_are_positional() {
        let (set, prob) = setup(12, 0.0, 0.0);
        let out = label_ribs(set, &prob, &TraceParams::default());
        assert_eq!(labels(&out, Side::Left)[0], "01l");
    }

    #[test]
    fn overflowing_count_is_unlabeled() {
        let (set, prob) = setup(13, 0.9, 0.0);
        let out = label_ribs(set, &prob, &TraceParams::default());
        let left = labels(&out, Side::Left);
        assert_eq!(left[0], "01l");
        assert_eq!(left[12], "unlabeled");
    }
}
