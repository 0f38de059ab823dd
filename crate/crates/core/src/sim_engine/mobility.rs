use rand::Rng;

use super::radio::Point;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Area {
    pub width: f64,
    pub height: f64,
}

impl Area {
    pub fn clamp(&self, p: Point) -> Point {
        Point::new(p.x.clamp(0.0, self.width), p.y.clamp(0.0, self.height))
    }

    pub fn center(&self) -> Point {
        Point::new(self.width / 2.0, self.height / 2.0)
    }

    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        Point::new(rng.random_range(0.0..=self.width), rng.random_range(0.0..=self.height))
    }
}

impl Default for Area {
    fn default() -> Self {
        Area { width: 200.0, height: 200.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityParams {
    pub speed_min: f64,
    pub speed_max: f64,
    pub pause_s: f64,
}

impl Default for MobilityParams {
    fn default() -> Self {
        MobilityParams { speed_min: 1.0, speed_max: 2.0, pause_s: 0.0 }
    }
}

/// Random-waypoint walker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwpState {
    pub waypoint: Point,
    pub speed: f64,
    pub pause_left: f64,
}

impl RwpState {
    pub fn new<R: Rng + ?Sized>(area: &Area, params: &MobilityParams, rng: &mut R) -> Self {
        RwpState { waypoint: area.random_point(rng), speed: draw_speed(params, rng), pause_left: 0.0 }
    }

    /// Advances `pos` by `dt` seconds. A node reaching its waypoint stops
    /// there for the rest of the tick, then pauses and picks the next leg.
    pub fn advance<R: Rng + ?Sized>(
        &mut self,
        pos: Point,
        dt: f64,
        area: &Area,
        params: &MobilityParams,
        rng: &mut R,
    ) -> Point {
        if self.pause_left > 0.0 {
            self.pause_left = (self.pause_left - dt).max(0.0);
            return pos;
        }
        let dist = pos.distance(&self.waypoint);
        let step = self.speed * dt;
        if step >= dist {
            let arrived = area.clamp(self.waypoint);
            self.waypoint = area.random_point(rng);
            self.speed = draw_speed(params, rng);
            self.pause_left = params.pause_s;
            return arrived;
        }
        let f = step / dist;
        area.clamp(Point::new(pos.x + (self.waypoint.x - pos.x) * f, pos.y + (self.waypoint.y - pos.y) * f))
    }
}

fn draw_speed<R: Rng + ?Sized>(params: &MobilityParams, rng: &mut R) -> f64 {
    if params.speed_max > params.speed_min {
        rng.random_range(params.speed_min..=params.speed_max)
    } else {
        params.speed_min
    }
}
