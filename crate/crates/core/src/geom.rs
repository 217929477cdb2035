//! Toroidal 2-D geometry.

/// A point inside the arena, `0 <= x < W`, `0 <= y < H`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

/// Arena extent; both axes wrap around.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arena {
    pub width: f64,
    pub height: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

impl Arena {
    pub fn new(width: f64, height: f64) -> Self {
        Self { width, height }
    }

    pub fn contains(&self, p: Position) -> bool {
        (0.0..self.width).contains(&p.x) && (0.0..self.height).contains(&p.y)
    }

    /// Wraps a point back into `[0, W) x [0, H)`.
    pub fn wrap(&self, p: Position) -> Position {
        Position::new(wrap_axis(p.x, self.width), wrap_axis(p.y, self.height))
    }

    /// Signed shortest displacement from `a` to `b` on each axis.
    pub fn signed_delta(&self, a: Position, b: Position) -> (f64, f64) {
        (
            signed_axis(b.x - a.x, self.width),
            signed_axis(b.y - a.y, self.height),
        )
    }
}

fn wrap_axis(v: f64, extent: f64) -> f64 {
    let w = v.rem_euclid(extent);
    // rem_euclid can round up to `extent` for tiny negative inputs
    if w >= extent {
        0.0
    } else {
        w
    }
}

fn signed_axis(d: f64, extent: f64) -> f64 {
    let half = extent / 2.0;
    if d > half {
        d - extent
    } else if d < -half {
        d + extent
    } else {
        d
    }
}

/// Per-axis unsigned torus distance, each component in `[0, D/2]`.
pub fn torus_delta(a: Position, b: Position, arena: Arena) -> (f64, f64) {
    let axis = |u: f64, v: f64, extent: f64| {
        let d = (u - v).abs();
        d.min(extent - d)
    };
    (axis(a.x, b.x, arena.width), axis(a.y, b.y, arena.height))
}

/// Inclusive range test on squared distances.
pub fn in_range(a: Position, b: Position, radius: f64, arena: Arena) -> bool {
    let (dx, dy) = torus_delta(a, b, arena);
    dx * dx + dy * dy <= radius * radius
}

pub fn torus_distance(a: Position, b: Position, arena: Arena) -> f64 {
    let (dx, dy) = torus_delta(a, b, arena);
    dx.hypot(dy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ARENA: Arena = Arena { width: 10_000.0, height: 10_000.0 };

    #[test]
    fn delta_examples() {
        let o = Position::new(0.0, 0.0);
        assert_eq!(torus_delta(o, Position::new(9999.0, 0.0), ARENA), (1.0, 0.0));
        assert_eq!(torus_delta(o, o, ARENA), (0.0, 0.0));
        assert_eq!(torus_delta(o, Position::new(5000.0, 5000.0), ARENA), (5000.0, 5000.0));
    }

    #[test]
    fn range_examples() {
        let o = Position::new(0.0, 0.0);
        assert!(in_range(o, Position::new(100.0, 200.0), 250.0, ARENA));
        assert!((torus_distance(o, Position::new(100.0, 200.0), ARENA) - 223.606_797_749_979).abs() < 1e-9);
        assert!(in_range(o, Position::new(9990.0, 0.0), 250.0, ARENA));
        assert!(!in_range(o, Position::new(0.0, 251.0), 250.0, ARENA));
        assert!(in_range(o, Position::new(0.0, 250.0), 250.0, ARENA));
    }

    #[test]
    fn wrap_handles_negative_epsilon() {
        let p = ARENA.wrap(Position::new(-1e-300, 10_000.0));
        assert!(ARENA.contains(p));
    }

    fn pos() -> impl Strategy<Value = Position> {
        (0.0..10_000.0f64, 0.0..10_000.0f64).prop_map(|(x, y)| Position::new(x, y))
    }

    proptest! {
        #[test]
        fn delta_symmetric_and_bounded(a in pos(), b in pos()) {
            let d1 = torus_delta(a, b, ARENA);
            let d2 = torus_delta(b, a, ARENA);
            prop_assert_eq!(d1, d2);
            prop_assert!(d1.0 >= 0.0 && d1.0 <= 5000.0);
            prop_assert!(d1.1 >= 0.0 && d1.1 <= 5000.0);
        }

        #[test]
        fn self_always_in_range(a in pos(), r in 1e-6..1e4f64) {
            prop_assert!(in_range(a, a, r, ARENA));
        }

        #[test]
        fn wrap_lands_inside(x in -1e5..1e5f64, y in -1e5..1e5f64) {
            prop_assert!(ARENA.contains(ARENA.wrap(Position::new(x, y))));
        }
    }
}
