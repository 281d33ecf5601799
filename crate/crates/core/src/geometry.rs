//! Placement of waveguide feeds, pinching antennas and users.

use alloc::vec::Vec;

use crate::error::{positive, Error, Result};

/// A point in meters. Users live on the ground plane (`z = 0`), pinches and
/// feeds at the waveguide height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3D {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Position3D) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        libm::sqrt(dx * dx + dy * dy + dz * dz)
    }

    pub fn translated(&self, by: &Position3D) -> Position3D {
        Position3D::new(self.x + by.x, self.y + by.y, self.z + by.z)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Where the guided wave enters each waveguide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeedConvention {
    /// Every feed at `(0, 0, d)`, as listed in the default parameter table.
    #[default]
    SharedOrigin,
    /// Feed of waveguide `n` at `(0, nD, d)`, i.e. at the start of its own axis.
    PerWaveguideAxis,
}

/// Positions of every feed, pinch and user.
///
/// With one-based `n`, `i`, `m` the regular layout is pinch `(iD, nD, d)` and
/// user `(mD, nD, 0)`; user `m` of waveguide `n` is served by pinch `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemLayout {
    num_waveguides: usize,
    users_per_waveguide: usize,
    spacing: f64,
    height: f64,
    feed_convention: FeedConvention,
    feeds: Vec<Position3D>,
    pinches: Vec<Position3D>,
    users: Vec<Position3D>,
}

/// Builds the regular grid layout.
pub fn build_layout(
    num_waveguides: usize,
    users_per_waveguide: usize,
    spacing: f64,
    height: f64,
    feed_convention: FeedConvention,
) -> Result<SystemLayout> {
    if num_waveguides == 0 {
        return Err(Error::InvalidArgument { name: "num_waveguides", value: 0.0 });
    }
    if users_per_waveguide == 0 {
        return Err(Error::InvalidArgument { name: "users_per_waveguide", value: 0.0 });
    }
    positive("spacing", spacing)?;
    positive("height", height)?;

    let mut feeds = Vec::with_capacity(num_waveguides);
    let mut pinches = Vec::with_capacity(num_waveguides * users_per_waveguide);
    let mut users = Vec::with_capacity(num_waveguides * users_per_waveguide);
    for n in 0..num_waveguides {
        let y = (n + 1) as f64 * spacing;
        feeds.push(match feed_convention {
            FeedConvention::SharedOrigin => Position3D::new(0.0, 0.0, height),
            FeedConvention::PerWaveguideAxis => Position3D::new(0.0, y, height),
        });
        for i in 0..users_per_waveguide {
            let x = (i + 1) as f64 * spacing;
            pinches.push(Position3D::new(x, y, height));
            users.push(Position3D::new(x, y, 0.0));
        }
    }
    Ok(SystemLayout { num_waveguides, users_per_waveguide, spacing, height, feed_convention, feeds, pinches, users })
}

impl SystemLayout {
    /// Layout from explicit coordinates. `pinches` and `users` are row-major
    /// `N x M`. Spacing is informational only here and may be any positive value.
    pub fn from_positions(
        feeds: Vec<Position3D>,
        pinches: Vec<Position3D>,
        users: Vec<Position3D>,
        users_per_waveguide: usize,
        spacing: f64,
    ) -> Result<Self> {
        let num_waveguides = feeds.len();
        if num_waveguides == 0 || users_per_waveguide == 0 {
            return Err(Error::InvalidArgument { name: "layout size", value: 0.0 });
        }
        let expected = (num_waveguides, users_per_waveguide);
        for found in [pinches.len(), users.len()] {
            if found != num_waveguides * users_per_waveguide {
                return Err(Error::ShapeMismatch {
                    expected,
                    found: (found / users_per_waveguide, found % users_per_waveguide),
                });
            }
        }
        positive("spacing", spacing)?;
        for p in feeds.iter().chain(&pinches).chain(&users) {
            if !p.is_finite() {
                return Err(Error::InvalidArgument { name: "position", value: f64::NAN });
            }
        }
        let height = pinches[0].z;
        Ok(SystemLayout {
            num_waveguides,
            users_per_waveguide,
            spacing,
            height,
            feed_convention: FeedConvention::SharedOrigin,
            feeds,
            pinches,
            users,
        })
    }

    pub fn num_waveguides(&self) -> usize {
        self.num_waveguides
    }

    pub fn users_per_waveguide(&self) -> usize {
        self.users_per_waveguide
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn feed_convention(&self) -> FeedConvention {
        self.feed_convention
    }

    pub fn feed(&self, n: usize) -> &Position3D {
        &self.feeds[n]
    }

    pub fn pinch(&self, n: usize, i: usize) -> &Position3D {
        &self.pinches[n * self.users_per_waveguide + i]
    }

    pub fn user(&self, n: usize, m: usize) -> &Position3D {
        &self.users[n * self.users_per_waveguide + m]
    }

    /// Same layout shifted by a common vector.
    pub fn translated(&self, by: &Position3D) -> SystemLayout {
        let shift = |v: &[Position3D]| v.iter().map(|p| p.translated(by)).collect();
        SystemLayout {
            feeds: shift(&self.feeds),
            pinches: shift(&self.pinches),
            users: shift(&self.users),
            ..self.clone()
        }
    }

    pub(crate) fn check_waveguide(&self, n: usize) -> Result<()> {
        if n < self.num_waveguides {
            Ok(())
        } else {
            Err(Error::InvalidIndex { what: "waveguide", index: n, bound: self.num_waveguides })
        }
    }

    pub(crate) fn check_user(&self, m: usize) -> Result<()> {
        if m < self.users_per_waveguide {
            Ok(())
        } else {
            Err(Error::InvalidIndex { what: "user", index: m, bound: self.users_per_waveguide })
        }
    }
}
