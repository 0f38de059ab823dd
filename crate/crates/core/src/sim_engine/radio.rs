use rand::Rng;

use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Unit-disk link with independent per-attempt loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkModel {
    pub tx_range: f64,
    pub loss_prob: f64,
    pub hop_delay: SimTime,
    /// Extra attempts after a failed unicast.
    pub mac_retries: u32,
    pub bitrate_bps: u64,
}

impl Default for LinkModel {
    fn default() -> Self {
        LinkModel {
            tx_range: 50.0,
            loss_prob: 0.0,
            hop_delay: SimTime::from_millis(5),
            mac_retries: 2,
            bitrate_bps: 250_000,
        }
    }
}

impl LinkModel {
    pub fn in_range(&self, a: &Point, b: &Point) -> bool {
        a.distance(b) <= self.tx_range
    }

    /// One draw of the per-attempt loss.
    pub fn frame_survives<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        rng.random::<f64>() >= self.loss_prob
    }

    pub fn airtime(&self, bytes: usize) -> SimTime {
        SimTime::from_micros((bytes as u64 * 8 * 1_000_000).div_ceil(self.bitrate_bps.max(1)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_disk_boundary() {
        let link = LinkModel::default();
        let o = Point::new(0.0, 0.0);
        assert!(link.in_range(&o, &Point::new(40.0, 0.0)));
        assert!(link.in_range(&o, &Point::new(30.0, 40.0)));
        assert!(!link.in_range(&o, &Point::new(60.0, 0.0)));
    }

    #[test]
    fn airtime_at_250k() {
        let link = LinkModel::default();
        assert_eq!(link.airtime(1), SimTime::from_micros(32));
        assert_eq!(link.airtime(30), SimTime::from_micros(960));
    }
}
