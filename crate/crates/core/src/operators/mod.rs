//! Linear operators of the degradation model: blur, decimation, derivative
//! filters and warping, each paired with an exact adjoint.

mod conv;
mod degrade;
mod gradient;
mod kernel;
mod sampling;
mod warp;

pub use conv::{convolve2d, convolve2d_adjoint, sk_adjoint, sk_forward};
pub use degrade::{degrade, DegradationConfig};
pub use gradient::{gradient_h, gradient_h_adjoint, gradient_normal, gradient_v, gradient_v_adjoint};
pub use kernel::{BlurKernel, SUM_TOLERANCE};
pub(crate) use kernel::check_odd;
pub use sampling::{decimate, decimate_adjoint};
pub use warp::{warp, FlowField};

/// Boundary handling for spatial operators. Only replicate padding is supported.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Boundary {
    #[default]
    Replicate,
}
