//! Line-of-sight channel gains of pinching antennas and the normalized table
//! the power solver works from.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{positive, Error, Result};
use crate::geometry::SystemLayout;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Complex amplitude gain; `norm_sqr()` is the power gain.
pub type ComplexGain = Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveguideParams {
    pub carrier_frequency: f64,
    /// Free-space wavelength `c / f_c`.
    pub wavelength: f64,
    /// Wavelength inside the dielectric waveguide.
    pub guided_wavelength: f64,
    /// Path-loss constant `c^2 / (16 pi^2 f_c^2)`, in square meters.
    pub eta: f64,
}

/// `guided_ratio` is `lambda / lambda_g` (1.4 by default).
pub fn derive_params(carrier_frequency: f64, guided_ratio: f64) -> Result<WaveguideParams> {
    positive("carrier_frequency", carrier_frequency)?;
    positive("guided_ratio", guided_ratio)?;
    let wavelength = SPEED_OF_LIGHT / carrier_frequency;
    let eta = SPEED_OF_LIGHT * SPEED_OF_LIGHT / (16.0 * PI * PI * carrier_frequency * carrier_frequency);
    Ok(WaveguideParams { carrier_frequency, wavelength, guided_wavelength: wavelength / guided_ratio, eta })
}

// exp(-j 2 pi cycles), reducing the cycle count first so that long paths keep
// their sub-wavelength phase resolution.
fn phasor(cycles: f64) -> Complex64 {
    let frac = cycles - libm::floor(cycles);
    let angle = -2.0 * PI * frac;
    Complex64::new(libm::cos(angle), libm::sin(angle))
}

/// Gain from antenna `antenna` of waveguide `src` to user `user` of waveguide
/// `dst`: one free-space term carrying the guided phase from the feed of `src`.
fn antenna_term(
    layout: &SystemLayout,
    params: &WaveguideParams,
    src: usize,
    antenna: usize,
    dst: usize,
    user: usize,
) -> Result<Complex64> {
    let pinch = layout.pinch(src, antenna);
    let r = layout.user(dst, user).distance(pinch);
    if r == 0.0 {
        return Err(Error::SingularGeometry { waveguide: src, antenna, user_waveguide: dst, user });
    }
    let guided = layout.feed(src).distance(pinch);
    let cycles = r / params.wavelength + guided / params.guided_wavelength;
    Ok(phasor(cycles) * (libm::sqrt(params.eta) / r))
}

/// Own channel `h_{n,m}`: the coherent sum over every pinch of waveguide `n`,
/// taken in ascending antenna order.
pub fn own_channel_gain(layout: &SystemLayout, params: &WaveguideParams, n: usize, m: usize) -> Result<ComplexGain> {
    layout.check_waveguide(n)?;
    layout.check_user(m)?;
    let mut h = Complex64::new(0.0, 0.0);
    for i in 0..layout.users_per_waveguide() {
        h += antenna_term(layout, params, n, i, n, m)?;
    }
    Ok(h)
}

/// Cross channel `h_{n',n,i,m}` from antenna `i` of waveguide `src` to user
/// `m` of a different waveguide `dst`.
pub fn cross_channel_gain(
    layout: &SystemLayout,
    params: &WaveguideParams,
    src: usize,
    dst: usize,
    i: usize,
    m: usize,
) -> Result<ComplexGain> {
    layout.check_waveguide(src)?;
    layout.check_waveguide(dst)?;
    layout.check_user(i)?;
    layout.check_user(m)?;
    if src == dst {
        return Err(Error::InvalidIndex {
            what: "cross-gain source waveguide (equals destination)",
            index: src,
            bound: layout.num_waveguides(),
        });
    }
    antenna_term(layout, params, src, i, dst, m)
}

/// Gains normalized by each user's own channel, as seen by the power solver.
///
/// Everything the solver needs about the radio environment lives here; a
/// waveguide only has to know its users' normalized interference plus noise.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTable {
    num_waveguides: usize,
    users_per_waveguide: usize,
    own_gain_sq: Vec<f64>,
    // indexed [dst][user][src][antenna]; src == dst entries are zero and unused
    cross: Vec<f64>,
    normalized_noise: Vec<f64>,
}

pub fn build_channel_table(layout: &SystemLayout, params: &WaveguideParams, noise_power: f64) -> Result<ChannelTable> {
    positive("noise_power", noise_power)?;
    let n_wg = layout.num_waveguides();
    let m_users = layout.users_per_waveguide();
    let mut own_gain_sq = Vec::with_capacity(n_wg * m_users);
    for n in 0..n_wg {
        for m in 0..m_users {
            let g = own_channel_gain(layout, params, n, m)?.norm_sqr();
            if g <= 0.0 || !g.is_finite() {
                return Err(Error::VanishingGain { waveguide: n, user: m });
            }
            own_gain_sq.push(g);
        }
    }
    let mut cross = vec![0.0; n_wg * m_users * n_wg * m_users];
    for dst in 0..n_wg {
        for m in 0..m_users {
            let own = own_gain_sq[dst * m_users + m];
            for src in (0..n_wg).filter(|&s| s != dst) {
                for i in 0..m_users {
                    let g = antenna_term(layout, params, src, i, dst, m)?.norm_sqr();
                    cross[((dst * m_users + m) * n_wg + src) * m_users + i] = g / own;
                }
            }
        }
    }
    let normalized_noise = own_gain_sq.iter().map(|g| noise_power / g).collect();
    Ok(ChannelTable { num_waveguides: n_wg, users_per_waveguide: m_users, own_gain_sq, cross, normalized_noise })
}

impl ChannelTable {
    /// Table from already-normalized quantities, for synthetic instances.
    ///
    /// `cross(src, dst, antenna, user)` supplies `|h_{src,dst,antenna,user}|^2 / |h_{dst,user}|^2`
    /// and is only queried for `src != dst`. Own gains are set to one so that
    /// `normalized_noise` is also the raw noise.
    pub fn from_normalized(
        num_waveguides: usize,
        users_per_waveguide: usize,
        normalized_noise: Vec<f64>,
        mut cross: impl FnMut(usize, usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let n_wg = num_waveguides;
        let m_users = users_per_waveguide;
        if n_wg == 0 || m_users == 0 {
            return Err(Error::InvalidArgument { name: "table size", value: 0.0 });
        }
        if normalized_noise.len() != n_wg * m_users {
            return Err(Error::ShapeMismatch {
                expected: (n_wg, m_users),
                found: (normalized_noise.len() / m_users, normalized_noise.len() % m_users),
            });
        }
        for &s in &normalized_noise {
            positive("normalized_noise", s)?;
        }
        let mut table = vec![0.0; n_wg * m_users * n_wg * m_users];
        for dst in 0..n_wg {
            for m in 0..m_users {
                for src in (0..n_wg).filter(|&s| s != dst) {
                    for i in 0..m_users {
                        let g = cross(src, dst, i, m);
                        if !(g >= 0.0 && g.is_finite()) {
                            return Err(Error::InvalidArgument { name: "normalized_cross_gain_sq", value: g });
                        }
                        table[((dst * m_users + m) * n_wg + src) * m_users + i] = g;
                    }
                }
            }
        }
        Ok(ChannelTable {
            num_waveguides: n_wg,
            users_per_waveguide: m_users,
            own_gain_sq: vec![1.0; n_wg * m_users],
            cross: table,
            normalized_noise,
        })
    }

    pub fn num_waveguides(&self) -> usize {
        self.num_waveguides
    }

    pub fn users_per_waveguide(&self) -> usize {
        self.users_per_waveguide
    }

    pub fn own_gain_sq(&self, n: usize, m: usize) -> f64 {
        self.own_gain_sq[n * self.users_per_waveguide + m]
    }

    /// `sigma^2 / |h_{n,m}|^2`, in watts.
    pub fn normalized_noise(&self, n: usize, m: usize) -> f64 {
        self.normalized_noise[n * self.users_per_waveguide + m]
    }

    /// `|h_{src,dst,i,m}|^2 / |h_{dst,m}|^2`; `None` when `src == dst`.
    pub fn normalized_cross_gain_sq(&self, src: usize, dst: usize, i: usize, m: usize) -> Option<f64> {
        (src != dst).then(|| self.cross_row(dst, m)[src * self.users_per_waveguide + i])
    }

    /// All normalized cross gains into user `(dst, m)`, laid out `[src][antenna]`.
    pub(crate) fn cross_row(&self, dst: usize, m: usize) -> &[f64] {
        let len = self.num_waveguides * self.users_per_waveguide;
        let start = (dst * self.users_per_waveguide + m) * len;
        &self.cross[start..start + len]
    }

    /// Copy with every noise entry multiplied by `factor`.
    pub fn with_noise_scaled(&self, factor: f64) -> ChannelTable {
        ChannelTable { normalized_noise: self.normalized_noise.iter().map(|s| s * factor).collect(), ..self.clone() }
    }
}
