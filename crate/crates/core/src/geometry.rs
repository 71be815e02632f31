//! Axis-aligned bounding-box arithmetic.
//!
//! Coordinates are image pixels with the origin at the top-left corner,
//! `x` growing rightward and `y` growing downward. Boxes are real-valued
//! because detector output is sub-pixel.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("box coordinates must be finite: ({0}, {1}, {2}, {3})")]
    NonFinite(f64, f64, f64, f64),
    #[error("box must satisfy x_min < x_max and y_min < y_max: ({0}, {1}, {2}, {3})")]
    Degenerate(f64, f64, f64, f64),
}

/// An axis-aligned rectangle with strictly positive extent.
///
/// Fields are private so that every value in circulation has a positive
/// area; [`overlap_ratio`] divides by it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundingBox {
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
}

impl BoundingBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, GeometryError> {
        if !(x_min.is_finite() && y_min.is_finite() && x_max.is_finite() && y_max.is_finite()) {
            return Err(GeometryError::NonFinite(x_min, y_min, x_max, y_max));
        }
        if x_min >= x_max || y_min >= y_max {
            return Err(GeometryError::Degenerate(x_min, y_min, x_max, y_max));
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    /// Box of the given size whose top-left corner is at `(x, y)`.
    pub fn from_origin_size(
        x: f64,
        y: f64,
        width: f64,
        height: f64,
    ) -> Result<Self, GeometryError> {
        Self::new(x, y, x + width, y + height)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Result<Self, GeometryError> {
        Self::new(
            self.x_min + dx,
            self.y_min + dy,
            self.x_max + dx,
            self.y_max + dy,
        )
    }

    /// Scales every coordinate by `s` about the image origin.
    pub fn scale(&self, s: f64) -> Result<Self, GeometryError> {
        Self::new(
            self.x_min * s,
            self.y_min * s,
            self.x_max * s,
            self.y_max * s,
        )
    }

    /// True when `other` lies inside `self` (boundaries may coincide).
    pub fn contains(&self, other: &BoundingBox) -> bool {
        self.x_min <= other.x_min
            && self.y_min <= other.y_min
            && other.x_max <= self.x_max
            && other.y_max <= self.y_max
    }
}

impl<'de> Deserialize<'de> for BoundingBox {
    fn deserialize<D>(deserializer: D) -> Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        struct Raw {
            x_min: f64,
            y_min: f64,
            x_max: f64,
            y_max: f64,
        }
        let raw = Raw::deserialize(deserializer)?;
        BoundingBox::new(raw.x_min, raw.y_min, raw.x_max, raw.y_max)
            .map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for BoundingBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}, {})",
            self.x_min, self.y_min, self.x_max, self.y_max
        )
    }
}

pub fn area(b: &BoundingBox) -> f64 {
    b.area()
}

/// Area of the intersection of two boxes. Boxes that only share an edge or
/// a corner have zero overlap.
pub fn overlap_area(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let w = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    let h = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
    w * h
}

/// Intersection area divided by the area of the smaller box.
///
/// Unlike IoU this reaches 1 whenever the smaller box is fully inside the
/// larger one, so a large box around one person does not dilute the score.
pub fn overlap_ratio(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let smaller = a.area().min(b.area());
    (overlap_area(a, b) / smaller).clamp(0.0, 1.0)
}
