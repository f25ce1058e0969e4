use super::{NetworkError, Params, Real, INPUT_SHIFT, KERNEL, LEAKY_SLOPE, PAD, STRIDE};

pub fn conv_out_side(side: usize) -> usize {
    (side + 2 * PAD - KERNEL) / STRIDE + 1
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Cache<T> {
    sides: Vec<usize>,
    cols: Vec<Vec<T>>,
    z: Vec<Vec<T>>,
    emb: Vec<T>,
    att_sum: T,
    pooled: Vec<T>,
    z1: Vec<T>,
    h: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct Forward<T> {
    pub logits: Vec<T>,
    /// `m × m` attention map in `[0, 1]`, row-major.
    pub attention: Vec<T>,
    pub attention_side: usize,
    pub cache: Cache<T>,
}

#[inline]
fn leaky<T: Real>(v: T) -> T {
    if v > T::zero() {
        v
    } else {
        v * T::of(LEAKY_SLOPE)
    }
}

#[inline]
fn leaky_grad<T: Real>(z: T) -> T {
    if z > T::zero() {
        T::one()
    } else {
        T::of(LEAKY_SLOPE)
    }
}

fn sigmoid<T: Real>(v: T) -> T {
    T::one() / (T::one() + (-v).exp())
}

fn im2col<T: Real>(x: &[T], c: usize, side: usize, out: usize) -> Vec<T> {
    let p = out * out;
    let mut cols = vec![T::zero(); c * KERNEL * KERNEL * p];
    for ci in 0..c {
        let plane = &x[ci * side * side..(ci + 1) * side * side];
        for ky in 0..KERNEL {
            for kx in 0..KERNEL {
                let row = &mut cols[((ci * KERNEL + ky) * KERNEL + kx) * p..][..p];
                for oy in 0..out {
                    let iy = (oy * STRIDE + ky) as isize - PAD as isize;
                    if iy < 0 || iy >= side as isize {
                        continue;
                    }
                    let src = &plane[iy as usize * side..][..side];
                    for ox in 0..out {
                        let ix = (ox * STRIDE + kx) as isize - PAD as isize;
                        if ix >= 0 && ix < side as isize {
                            row[oy * out + ox] = src[ix as usize];
                        }
                    }
                }
            }
        }
    }
    cols
}

fn col2im<T: Real>(cols: &[T], c: usize, side: usize, out: usize) -> Vec<T> {
    let p = out * out;
    let mut x = vec![T::zero(); c * side * side];
    for ci in 0..c {
        for ky in 0..KERNEL {
            for kx in 0..KERNEL {
                let row = &cols[((ci * KERNEL + ky) * KERNEL + kx) * p..][..p];
                for oy in 0..out {
                    let iy = (oy * STRIDE + ky) as isize - PAD as isize;
                    if iy < 0 || iy >= side as isize {
                        continue;
                    }
                    for ox in 0..out {
                        let ix = (ox * STRIDE + kx) as isize - PAD as isize;
                        if ix >= 0 && ix < side as isize {
                            x[(ci * side + iy as usize) * side + ix as usize] += row[oy * out + ox];
                        }
                    }
                }
            }
        }
    }
    x
}

/// Runs the network on one `C × side × side` input.
pub fn forward<T: Real>(params: &Params<T>, input: &[f32], side: usize) -> Result<Forward<T>, NetworkError> {
    let arch = &params.arch;
    let expected = arch.in_channels * side * side;
    if input.len() != expected || side == 0 {
        return Err(NetworkError::ShapeMismatch {
            expected,
            got: input.len(),
        });
    }
    let mut x: Vec<T> = input.iter().map(|&v| T::of(v as f64 + INPUT_SHIFT)).collect();
    let mut s = side;
    let mut cin = arch.in_channels;
    let nconv = arch.conv_channels.len();
    let mut cache = Cache {
        sides: Vec::with_capacity(nconv),
        cols: Vec::with_capacity(nconv),
        z: Vec::with_capacity(nconv),
        emb: Vec::new(),
        att_sum: T::zero(),
        pooled: Vec::new(),
        z1: Vec::new(),
        h: Vec::new(),
    };

    for (l, &cout) in arch.conv_channels.iter().enumerate() {
        let out = conv_out_side(s);
        let p = out * out;
        let kk = cin * KERNEL * KERNEL;
        let cols = im2col(&x, cin, s, out);
        let w = params.tensor(2 * l);
        let b = params.tensor(2 * l + 1);
        let mut z = vec![T::zero(); cout * p];
        for (co, row) in z.chunks_exact_mut(p).enumerate() {
            row.fill(b[co]);
        }
        T::gemm(cout, kk, p, T::one(), w, (kk as isize, 1), &cols, (p as isize, 1), T::one(), &mut z, (p as isize, 1));
        x = z.iter().map(|&v| leaky(v)).collect();
        cache.sides.push(s);
        cache.cols.push(cols);
        cache.z.push(z);
        s = out;
        cin = cout;
    }

    // attention-weighted pooling over the m×m embedding grid
    let p = s * s;
    let aw = params.tensor(2 * nconv);
    let ab = params.tensor(2 * nconv + 1)[0];
    let mut att = vec![T::zero(); p];
    for (j, a) in att.iter_mut().enumerate() {
        let mut v = ab;
        for c in 0..cin {
            v += aw[c] * x[c * p + j];
        }
        *a = sigmoid(v);
    }
    let att_sum: T = att.iter().copied().sum();
    let pooled: Vec<T> = (0..cin)
        .map(|c| {
            let mut acc = T::zero();
            for j in 0..p {
                acc += att[j] * x[c * p + j];
            }
            acc / att_sum
        })
        .collect();

    let fc1_w = params.tensor(2 * nconv + 2);
    let fc1_b = params.tensor(2 * nconv + 3);
    let fc2_w = params.tensor(2 * nconv + 4);
    let fc2_b = params.tensor(2 * nconv + 5);
    let z1: Vec<T> = (0..arch.hidden)
        .map(|o| {
            let mut v = fc1_b[o];
            for c in 0..cin {
                v += fc1_w[o * cin + c] * pooled[c];
            }
            v
        })
        .collect();
    let h: Vec<T> = z1.iter().map(|&v| leaky(v)).collect();
    let logits: Vec<T> = (0..arch.outputs)
        .map(|o| {
            let mut v = fc2_b[o];
            for c in 0..arch.hidden {
                v += fc2_w[o * arch.hidden + c] * h[c];
            }
            v
        })
        .collect();

    cache.emb = x;
    cache.att_sum = att_sum;
    cache.pooled = pooled;
    cache.z1 = z1;
    cache.h = h;
    Ok(Forward {
        logits,
        attention: att,
        attention_side: s,
        cache,
    })
}

/// Loss and logit gradient for one sample with integer label.
pub fn softmax_cross_entropy<T: Real>(logits: &[T], label: usize) -> (T, Vec<T>) {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    let loss = sum.ln() - (logits[label] - max);
    let grad = exps
        .iter()
        .enumerate()
        .map(|(i, &e)| e / sum - if i == label { T::one() } else { T::zero() })
        .collect();
    (loss, grad)
}

/// Accumulates the gradient of a loss with logit gradient `dlogits` into
/// `grad` (same layout as `params.data`).
pub fn backward<T: Real>(params: &Params<T>, fwd: &Forward<T>, dlogits: &[T], grad: &mut [T]) {
    let arch = &params.arch;
    let nconv = arch.conv_channels.len();
    let cache = &fwd.cache;
    let cin = *arch.conv_channels.last().expect("at least one conv block");
    let hidden = arch.hidden;
    let spec = |i: usize| (params.specs[i].offset, params.specs[i].len());

    // fc2
    let fc2_w = params.tensor(2 * nconv + 4);
    let (ow, _) = spec(2 * nconv + 4);
    let (ob, _) = spec(2 * nconv + 5);
    let mut dh = vec![T::zero(); hidden];
    for (o, &g) in dlogits.iter().enumerate() {
        grad[ob + o] += g;
        for c in 0..hidden {
            grad[ow + o * hidden + c] += g * cache.h[c];
            dh[c] += g * fc2_w[o * hidden + c];
        }
    }

    // fc1
    let fc1_w = params.tensor(2 * nconv + 2);
    let (ow, _) = spec(2 * nconv + 2);
    let (ob, _) = spec(2 * nconv + 3);
    let mut dpooled = vec![T::zero(); cin];
    for o in 0..hidden {
        let g = dh[o] * leaky_grad(cache.z1[o]);
        grad[ob + o] += g;
        for c in 0..cin {
            grad[ow + o * cin + c] += g * cache.pooled[c];
            dpooled[c] += g * fc1_w[o * cin + c];
        }
    }

    // attention pooling
    let p = fwd.attention_side * fwd.attention_side;
    let att = &fwd.attention;
    let emb = &cache.emb;
    let aw = params.tensor(2 * nconv);
    let (oaw, _) = spec(2 * nconv);
    let (oab, _) = spec(2 * nconv + 1);
    let inv_sum = T::one() / cache.att_sum;
    let mut demb = vec![T::zero(); cin * p];
    for j in 0..p {
        let mut da = T::zero();
        for c in 0..cin {
            demb[c * p + j] += dpooled[c] * att[j] * inv_sum;
            da += dpooled[c] * (emb[c * p + j] - cache.pooled[c]) * inv_sum;
        }
        let ds = da * att[j] * (T::one() - att[j]);
        grad[oab] += ds;
        for c in 0..cin {
            grad[oaw + c] += ds * emb[c * p + j];
            demb[c * p + j] += ds * aw[c];
        }
    }

    // conv blocks, last to first
    let mut dx = demb;
    for l in (0..nconv).rev() {
        let cout = arch.conv_channels[l];
        let c_in = if l == 0 { arch.in_channels } else { arch.conv_channels[l - 1] };
        let s = cache.sides[l];
        let out = conv_out_side(s);
        let p = out * out;
        let kk = c_in * KERNEL * KERNEL;
        let z = &cache.z[l];
        let dz: Vec<T> = dx.iter().zip(z).map(|(&d, &zv)| d * leaky_grad(zv)).collect();
        let (ow, lw) = spec(2 * l);
        let (ob, _) = spec(2 * l + 1);
        for co in 0..cout {
            let mut acc = T::zero();
            for v in &dz[co * p..(co + 1) * p] {
                acc += *v;
            }
            grad[ob + co] += acc;
        }
        // dW += dz · colsᵀ
        T::gemm(
            cout,
            p,
            kk,
            T::one(),
            &dz,
            (p as isize, 1),
            &cache.cols[l],
            (1, p as isize),
            T::one(),
            &mut grad[ow..ow + lw],
            (kk as isize, 1),
        );
        if l > 0 {
            let w = params.tensor(2 * l);
            let mut dcols = vec![T::zero(); kk * p];
            // dcols = Wᵀ · dz
            T::gemm(kk, cout, p, T::one(), w, (1, kk as isize), &dz, (p as isize, 1), T::zero(), &mut dcols, (p as isize, 1));
            dx = col2im(&dcols, c_in, s, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::ArchConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn input(rng: &mut impl Rng, side: usize) -> Vec<f32> {
        (0..8 * side * side).map(|_| rng.random::<f32>()).collect()
    }

    #[test]
    fn shapes_and_ranges() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = Params::<f32>::init(ArchConfig::default(), &mut rng);
        let x = input(&mut rng, 128);
        let f = forward(&p, &x, 128).unwrap();
        assert_eq!(f.logits.len(), 13);
        assert_eq!(f.attention_side, 4);
        assert_eq!(f.attention.len(), 16);
        assert!(f.attention.iter().all(|&a| (0.0..=1.0).contains(&a)));
        // zero final layer: uniform logits
        assert!(f.logits.iter().all(|&v| v == 0.0));
        assert!(forward(&p, &x[1..], 128).is_err());
    }

    #[test]
    fn attention_weights_normalize() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = Params::<f64>::init_full(ArchConfig::default(), &mut rng);
        let f = forward(&p, &input(&mut rng, 64), 64).unwrap();
        let w: f64 = f.attention.iter().map(|a| a / f.cache.att_sum).sum();
        assert!((w - 1.0).abs() < 1e-6);
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = Params::<f32>::init_full(ArchConfig::default(), &mut rng);
        let x = input(&mut rng, 32);
        assert_eq!(forward(&p, &x, 32).unwrap().logits, forward(&p, &x, 32).unwrap().logits);
    }

    #[test]
    fn im2col_col2im_adjoint() {
        // <im2col(x), y> == <x, col2im(y)>
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (c, s) = (3, 7);
        let out = conv_out_side(s);
        let x: Vec<f64> = (0..c * s * s).map(|_| rng.random()).collect();
        let y: Vec<f64> = (0..c * 9 * out * out).map(|_| rng.random()).collect();
        let lhs: f64 = im2col(&x, c, s, out).iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(&col2im(&y, c, s, out)).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn confident_prediction_has_small_loss() {
        let mut l = vec![0.0f64; 13];
        l[4] = 20.0;
        let (loss, g) = softmax_cross_entropy(&l, 4);
        assert!(loss < 1e-3);
        assert!(g.iter().sum::<f64>().abs() < 1e-12);
    }
}
