//! Extended-precision complex dense linear algebra.

macro_rules! copy_ops {
    ($t:ty, $add:ident, $mul:ident, $div:ident) => {
        impl std::ops::Add for $t {
            type Output = $t;
            #[inline]
            fn add(self, r: $t) -> $t {
                <$t>::$add(self, r)
            }
        }
        impl<'a> std::ops::Add<&'a $t> for $t {
            type Output = $t;
            #[inline]
            fn add(self, r: &'a $t) -> $t {
                <$t>::$add(self, *r)
            }
        }
        impl std::ops::Sub for $t {
            type Output = $t;
            #[inline]
            fn sub(self, r: $t) -> $t {
                <$t>::$add(self, -r)
            }
        }
        impl<'a> std::ops::Sub<&'a $t> for $t {
            type Output = $t;
            #[inline]
            fn sub(self, r: &'a $t) -> $t {
                <$t>::$add(self, -*r)
            }
        }
        impl std::ops::Mul for $t {
            type Output = $t;
            #[inline]
            fn mul(self, r: $t) -> $t {
                <$t>::$mul(self, r)
            }
        }
        impl<'a> std::ops::Mul<&'a $t> for $t {
            type Output = $t;
            #[inline]
            fn mul(self, r: &'a $t) -> $t {
                <$t>::$mul(self, *r)
            }
        }
        impl std::ops::Div for $t {
            type Output = $t;
            #[inline]
            fn div(self, r: $t) -> $t {
                <$t>::$div(self, r)
            }
        }
        impl<'a> std::ops::Div<&'a $t> for $t {
            type Output = $t;
            #[inline]
            fn div(self, r: &'a $t) -> $t {
                <$t>::$div(self, *r)
            }
        }
        impl std::ops::AddAssign for $t {
            #[inline]
            fn add_assign(&mut self, r: $t) {
                *self = <$t>::$add(*self, r);
            }
        }
        impl<'a> std::ops::AddAssign<&'a $t> for $t {
            #[inline]
            fn add_assign(&mut self, r: &'a $t) {
                *self = <$t>::$add(*self, *r);
            }
        }
        impl std::ops::SubAssign for $t {
            #[inline]
            fn sub_assign(&mut self, r: $t) {
                *self = <$t>::$add(*self, -r);
            }
        }
        impl<'a> std::ops::SubAssign<&'a $t> for $t {
            #[inline]
            fn sub_assign(&mut self, r: &'a $t) {
                *self = <$t>::$add(*self, -*r);
            }
        }
        impl std::ops::MulAssign for $t {
            #[inline]
            fn mul_assign(&mut self, r: $t) {
                *self = <$t>::$mul(*self, r);
            }
        }
        impl<'a> std::ops::MulAssign<&'a $t> for $t {
            #[inline]
            fn mul_assign(&mut self, r: &'a $t) {
                *self = <$t>::$mul(*self, *r);
            }
        }
        impl std::ops::DivAssign for $t {
            #[inline]
            fn div_assign(&mut self, r: $t) {
                *self = <$t>::$div(*self, r);
            }
        }
        impl<'a> std::ops::DivAssign<&'a $t> for $t {
            #[inline]
            fn div_assign(&mut self, r: &'a $t) {
                *self = <$t>::$div(*self, *r);
            }
        }
    };
}
pub(crate) use copy_ops;

mod charpoly;
mod complex;
mod dd;
mod eft;
mod eigen;
mod error;
mod expm;
mod matrix;
mod mp;
mod precision;
mod qd;
mod quartic;
mod real;

pub use charpoly::{faddeev_leverrier, faddeev_leverrier_leading, palindromic_quartic, palindromic_reduce, CharPoly};
pub use complex::{Complex, C64};
pub use dd::DoubleDouble;
pub use eigen::{eigen, eigenvalues, hessenberg, normalize, refine_eigen, schur_in_place, with_diagnostics, EigenSolution};
pub use error::NumericsError;
pub use expm::{check_degeneracy, exp_from_eigen, mat_exp_eig, mat_exp_series, COND_CAP_FRACTION, DEGENERACY_GAP};
pub use matrix::{balance, unbalance_vector, CMatrix, Lu};
pub use mp::{context_bits, with_precision, MpFloat};
pub use precision::{Precision, PrecisionMode, PrecisionTask};
pub use qd::QuadDouble;
pub use quartic::{solve_quartic, z_to_lambda};
pub use real::Real;
