use memcnn::lattice::{run, ExperimentScript, Grid, Image};
use memcnn::protocols::{builtin_template, TemplateName};
use proptest::prelude::*;

/// White cells 4-connected to the frame stay white; the rest ends black.
fn flood_fill(u: &Grid<f64>) -> Grid<f64> {
    let (rows, cols) = u.shape();
    let mut out = Grid::new(rows, cols, 1.0);
    let mut stack = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            let edge = i == 0 || j == 0 || i + 1 == rows || j + 1 == cols;
            if edge && u[(i, j)] < 0.0 {
                out[(i, j)] = -1.0;
                stack.push((i, j));
            }
        }
    }
    while let Some((i, j)) = stack.pop() {
        let near = [(i.wrapping_sub(1), j), (i + 1, j), (i, j.wrapping_sub(1)), (i, j + 1)];
        for (a, b) in near {
            if a < rows && b < cols && u[(a, b)] < 0.0 && out[(a, b)] > 0.0 {
                out[(a, b)] = -1.0;
                stack.push((a, b));
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
struct Ring {
    top: usize,
    left: usize,
    height: usize,
    width: usize,
    gap: bool,
}

fn ring_strategy(size: usize) -> impl Strategy<Value = Ring> {
    (1..size - 6, 1..size - 6, any::<bool>()).prop_flat_map(move |(top, left, gap)| {
        (4..size - top, 4..size - left).prop_map(move |(height, width)| Ring {
            top,
            left,
            height: height.min(size - top - 1),
            width: width.min(size - left - 1),
            gap,
        })
    })
}

fn draw(size: usize, rings: &[Ring]) -> Image {
    let mut g = Grid::new(size, size, -1.0);
    for r in rings {
        let (b, rr) = (r.top + r.height - 1, r.left + r.width - 1);
        for i in r.top..=b {
            for j in r.left..=rr {
                if i == r.top || i == b || j == r.left || j == rr {
                    g[(i, j)] = 1.0;
                }
            }
        }
        if r.gap {
            g[(r.top, r.left + r.width / 2)] = -1.0;
        }
    }
    Image::from_values(g).unwrap()
}

fn converge(image: Image) -> Grid<f64> {
    let state = builtin_template(TemplateName::HoleFilling).lattice(image).unwrap();
    run(state, &ExperimentScript::new(), 150.0, 0.01).unwrap().final_y
}

#[test]
fn nested_rings() {
    let size = 24;
    let rings = [
        Ring { top: 2, left: 2, height: 20, width: 20, gap: false },
        Ring { top: 6, left: 6, height: 12, width: 12, gap: true },
    ];
    let image = draw(size, &rings);
    let expected = flood_fill(image.values());
    assert!(expected.iter().filter(|&&v| v > 0.0).count() == 400);
    assert_eq!(converge(image), expected);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn matches_flood_fill(rings in proptest::collection::vec(ring_strategy(20), 1..3)) {
        let image = draw(20, &rings);
        let expected = flood_fill(image.values());
        prop_assert_eq!(converge(image), expected);
    }
}
