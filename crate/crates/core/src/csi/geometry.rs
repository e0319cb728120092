use super::{CsiError, SimScenario};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathKind {
    Static,
    Dynamic,
}

/// One propagation path of a TX/RX pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Path {
    pub pair: usize,
    pub kind: PathKind,
    pub length: f64,
}

#[derive(Clone, Copy, Debug)]
enum Wall {
    Bottom,
    Top,
    Left,
    Right,
}

const WALLS: [Wall; 4] = [Wall::Bottom, Wall::Top, Wall::Left, Wall::Right];

fn mirror(p: [f64; 2], wall: Wall, scenario: &SimScenario) -> [f64; 2] {
    match wall {
        Wall::Bottom => [p[0], -p[1]],
        Wall::Top => [p[0], 2.0 * scenario.room_height - p[1]],
        Wall::Left => [-p[0], p[1]],
        Wall::Right => [2.0 * scenario.room_width - p[0], p[1]],
    }
}

pub fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

const COINCIDENT: f64 = 1e-9;

/// Static and dynamic paths for every TX/RX pair, pairs in TX-major order.
///
/// Static paths are the direct TX→RX ray followed by first-order wall
/// reflections (mirror-image construction, walls in bottom/top/left/right
/// order), truncated to `static_paths`. Dynamic paths, present only with a
/// target, are TX→target→RX followed by TX→target→wall→RX variants,
/// truncated to `dynamic_paths`.
pub fn path_geometry(scenario: &SimScenario, target: Option<[f64; 2]>) -> Result<Vec<Path>, CsiError> {
    if let Some(p) = target {
        if !scenario.contains(p) {
            return Err(CsiError::Geometry(format!("target {p:?} lies outside the room")));
        }
        for dev in scenario.tx.iter().chain(&scenario.rx) {
            if distance(p, *dev) < COINCIDENT {
                return Err(CsiError::Geometry(format!("target {p:?} coincides with a device at {dev:?}")));
            }
        }
    }
    let mut paths = Vec::new();
    let mut pair = 0;
    for &tx in &scenario.tx {
        for &rx in &scenario.rx {
            let direct = distance(tx, rx);
            if direct < COINCIDENT {
                return Err(CsiError::Geometry(format!("tx and rx coincide at {tx:?}")));
            }
            let statics = std::iter::once(direct)
                .chain(WALLS.iter().map(|&w| distance(tx, mirror(rx, w, scenario))))
                .take(scenario.static_paths);
            paths.extend(statics.map(|length| Path { pair, kind: PathKind::Static, length }));

            if let Some(p) = target {
                let first_leg = distance(tx, p);
                let dynamics = std::iter::once(first_leg + distance(p, rx))
                    .chain(WALLS.iter().map(|&w| first_leg + distance(p, mirror(rx, w, scenario))))
                    .take(scenario.dynamic_paths);
                paths.extend(dynamics.map(|length| Path { pair, kind: PathKind::Dynamic, length }));
            }
            pair += 1;
        }
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_scenario() -> SimScenario {
        SimScenario { tx: vec![[0.0, 0.0]], rx: vec![[3.0, 0.0]], ..Default::default() }
    }

    #[test]
    fn direct_static_path() {
        let paths = path_geometry(&line_scenario(), None).unwrap();
        assert_eq!(paths[0].kind, PathKind::Static);
        assert_eq!(paths[0].length, 3.0);
        assert_eq!(paths.len(), 3);
        assert!(paths.iter().all(|p| p.kind == PathKind::Static));
    }

    #[test]
    fn direct_dynamic_path() {
        let paths = path_geometry(&line_scenario(), Some([1.5, 2.0])).unwrap();
        let dynamic: Vec<_> = paths.iter().filter(|p| p.kind == PathKind::Dynamic).collect();
        assert_eq!(dynamic.len(), 3);
        assert_eq!(dynamic[0].length, 5.0);
        // reflected variants are never shorter than the direct bounce
        assert!(dynamic.iter().skip(1).all(|p| p.length >= 5.0));
    }

    #[test]
    fn target_on_device_is_rejected() {
        assert!(path_geometry(&line_scenario(), Some([0.0, 0.0])).is_err());
        assert!(path_geometry(&line_scenario(), Some([3.0, 0.0])).is_err());
    }

    #[test]
    fn counts_per_pair() {
        let s = SimScenario::default();
        let paths = path_geometry(&s, Some([2.0, 1.0])).unwrap();
        assert_eq!(paths.len(), 2 * (3 + 3));
        assert_eq!(paths.iter().filter(|p| p.pair == 1).count(), 6);
    }
}
