//! Dormand–Prince 8(5,3) with the 7th-order continuous extension (Hairer's DOP853).

use nalgebra::SVector;

use crate::error::{Error, Result};

const C: [f64; 12] = [
    0.0,
    5.260_015_195_876_773E-2,
    7.890_022_793_815_16E-2,
    1.183_503_419_072_274E-1,
    2.816_496_580_927_726E-1,
    3.333_333_333_333_333E-1,
    0.25,
    3.076_923_076_923_077E-1,
    6.512_820_512_820_513E-1,
    0.6,
    8.571_428_571_428_571E-1,
    1.0,
];

const A: [[f64; 11]; 12] = [
    [0.0; 11],
    [5.260_015_195_876_773E-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.972_505_698_453_79E-2, 5.917_517_095_361_37E-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [2.958_758_547_680_685E-2, 0.0, 8.876_275_643_042_054E-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [
        2.413_651_341_592_667E-1,
        0.0,
        -8.845_494_793_282_861E-1,
        9.248_340_032_617_92E-1,
        0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
    ],
    [
        3.703_703_703_703_703_5E-2,
        0.0,
        0.0,
        1.708_286_087_294_738_6E-1,
        1.254_676_875_668_224_2E-1,
        0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
    ],
    [
        3.7109375E-2,
        0.0,
        0.0,
        1.702_522_110_195_440_5E-1,
        6.021_653_898_045_596E-2,
        -1.7578125E-2,
        0.0, 0.0, 0.0, 0.0, 0.0,
    ],
    [
        3.709_200_011_850_479E-2,
        0.0,
        0.0,
        1.703_839_257_122_399_8E-1,
        1.072_620_304_463_732_8E-1,
        -1.531_943_774_862_440_2E-2,
        8.273_789_163_814_023E-3,
        0.0, 0.0, 0.0, 0.0,
    ],
    [
        6.241_109_587_160_757E-1,
        0.0,
        0.0,
        -3.360_892_629_446_941_4,
        -8.682_193_468_417_26E-1,
        2.759_209_969_944_671E1,
        2.015_406_755_047_789_4E1,
        -4.348_988_418_106_996E1,
        0.0, 0.0, 0.0,
    ],
    [
        4.776_625_364_382_643_4E-1,
        0.0,
        0.0,
        -2.488_114_619_971_667_7,
        -5.902_908_268_368_43E-1,
        2.123_005_144_818_119_3E1,
        1.527_923_363_288_242_3E1,
        -3.328_821_096_898_486E1,
        -2.033_120_170_850_862_7E-2,
        0.0, 0.0,
    ],
    [
        -9.371_424_300_859_873E-1,
        0.0,
        0.0,
        5.186_372_428_844_064,
        1.091_437_348_996_729_5,
        -8.149_787_010_746_927,
        -1.852_006_565_999_696E1,
        2.273_948_709_935_050_5E1,
        2.493_605_552_679_652_3,
        -3.046_764_471_898_219_6,
        0.0,
    ],
    [
        2.273_310_147_516_538,
        0.0,
        0.0,
        -1.053_449_546_673_725E1,
        -2.000_872_058_224_862_5,
        -1.795_893_186_311_88E1,
        2.794_888_452_941_996E1,
        -2.858_998_277_135_023_5,
        -8.872_856_933_530_63,
        1.236_056_717_579_430_3E1,
        6.433_927_460_157_636E-1,
    ],
];

const B: [f64; 12] = [
    5.429_373_411_656_876_5E-2,
    0.0,
    0.0,
    0.0,
    0.0,
    4.450_312_892_752_409,
    1.891_517_899_314_500_3,
    -5.801_203_960_010_585,
    3.111_643_669_578_199E-1,
    -1.521_609_496_625_161E-1,
    2.013_654_008_040_303_4E-1,
    4.471_061_572_777_259E-2,
];

const ER: [f64; 12] = [
    1.312_004_499_419_488E-2,
    0.0,
    0.0,
    0.0,
    0.0,
    -1.225_156_446_376_204_4,
    -4.957_589_496_572_502E-1,
    1.664_377_182_454_986_4,
    -3.503_288_487_499_736_6E-1,
    3.341_791_187_130_175E-1,
    8.192_320_648_511_571E-2,
    -2.235_530_786_388_629_4E-2,
];

const BHH: [f64; 3] = [
    2.440_944_881_889_764E-1,
    7.338_466_882_816_118E-1,
    2.205_882_352_941_176_6E-2,
];

const C_DENSE: [f64; 3] = [0.1, 0.2, 7.777_777_777_777_778E-1];

// Rows over stages 1..15 (index 12 is f at the new point, 13 and 14 the first
// two extra stages).
const A_DENSE: [[f64; 15]; 3] = [
    [
        5.616_750_228_304_795_4E-2,
        0.0, 0.0, 0.0, 0.0, 0.0,
        2.535_002_102_166_248_3E-1,
        -2.462_390_374_708_025E-1,
        -1.241_914_232_638_163_7E-1,
        1.532_917_982_787_656_8E-1,
        8.201_052_295_634_69E-3,
        7.567_897_660_545_699E-3,
        -8.298E-3,
        0.0, 0.0,
    ],
    [
        3.183_464_816_350_214E-2,
        0.0, 0.0, 0.0, 0.0,
        2.830_090_967_236_677_6E-2,
        5.354_198_830_743_856_6E-2,
        -5.492_374_857_139_099E-2,
        0.0, 0.0,
        -1.083_473_286_972_493_2E-4,
        3.825_710_908_356_584E-4,
        -3.404_650_086_874_045_6E-4,
        1.413_124_436_746_325E-1,
        0.0,
    ],
    [
        -4.288_963_015_837_919_4E-1,
        0.0, 0.0, 0.0, 0.0,
        -4.697_621_415_361_164,
        7.683_421_196_062_599,
        4.068_989_818_397_11,
        3.567_271_874_552_811E-1,
        0.0, 0.0, 0.0,
        -1.399_024_165_159_014_5E-3,
        2.947_514_789_152_772_4,
        -9.150_958_472_179_87,
    ],
];

const D: [[f64; 16]; 4] = [
    [
        -8.428_938_276_109_013,
        0.0, 0.0, 0.0, 0.0,
        5.667_149_535_193_777E-1,
        -3.068_949_945_949_891_7,
        2.384_667_656_512_07,
        2.117_034_582_445_028,
        -8.713_915_837_779_73E-1,
        2.240_437_430_260_788_3,
        6.315_787_787_694_688E-1,
        -8.899_033_645_133_331E-2,
        1.814_850_552_085_472_7E1,
        -9.194_632_392_478_356,
        -4.436_036_387_594_894,
    ],
    [
        1.042_750_864_257_913_4E1,
        0.0, 0.0, 0.0, 0.0,
        2.422_834_917_752_581_7E2,
        1.652_004_517_172_702_8E2,
        -3.745_467_547_226_902E2,
        -2.211_366_685_312_530_6E1,
        7.733_432_668_472_264,
        -3.067_408_473_108_939_8E1,
        -9.332_130_526_430_229,
        1.569_723_812_177_084_5E1,
        -3.113_940_321_956_517_8E1,
        -9.352_924_358_844_48,
        3.581_684_148_639_408E1,
    ],
    [
        1.998_505_324_200_243_3E1,
        0.0, 0.0, 0.0, 0.0,
        -3.870_373_087_493_518E2,
        -1.891_781_381_951_675_8E2,
        5.278_081_592_054_236E2,
        -1.157_390_253_995_963E1,
        6.881_232_694_696_3,
        -1.000_605_096_691_083_8,
        7.777_137_798_053_443E-1,
        -2.778_205_752_353_508,
        -6.019_669_523_126_412E1,
        8.432_040_550_667_716E1,
        1.199_229_113_618_279E1,
    ],
    [
        -2.569_393_346_270_375E1,
        0.0, 0.0, 0.0, 0.0,
        -1.541_897_486_902_364_3E2,
        -2.315_293_791_760_455E2,
        3.576_391_179_106_141E2,
        9.340_532_418_362_432E1,
        -3.745_832_313_645_163E1,
        1.040_996_495_089_623E2,
        2.984_029_342_666_05E1,
        -4.353_345_659_001_114E1,
        9.632_455_395_918_828E1,
        -3.917_726_167_561_544E1,
        -1.497_268_362_579_856_4E2,
    ],
];

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.333;
const FAC_MAX: f64 = 6.0;
const EXPO: f64 = 1.0 / 8.0;
const UROUND: f64 = 2.3e-16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
    pub max_step: f64,
    pub max_steps: usize,
    /// Initial step magnitude; 0 selects it automatically.
    pub initial_step: f64,
}

/// One accepted step with its continuous extension.
#[derive(Debug, Clone)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: SVector<f64, N>,
    pub y1: SVector<f64, N>,
    cont: Option<[SVector<f64, N>; 8]>,
}

impl<const N: usize> DenseStep<N> {
    pub fn has_dense(&self) -> bool {
        self.cont.is_some()
    }

    /// Interpolated state at `t` inside the step.
    ///
    /// Panics if the step was produced without dense output.
    pub fn eval(&self, t: f64) -> SVector<f64, N> {
        let h = self.t1 - self.t0;
        let s = (t - self.t0) / h;
        let s1 = 1.0 - s;
        let c = self.cont.as_ref().expect("step built without dense output");
        let conpar = c[4] + (c[5] + (c[6] + c[7] * s) * s1) * s;
        c[0] + (c[1] + (c[2] + (c[3] + conpar * s1) * s) * s1) * s
    }
}

/// Returned by a step observer.
pub enum Flow<const N: usize> {
    Continue,
    /// Terminate with this final time and state.
    Stop(f64, SVector<f64, N>),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction). The observer
/// sees every accepted step and may stop the integration. Dense output costs
/// three extra evaluations per step and is only built when `dense` is set.
pub fn solve<const N: usize, F, O>(
    mut f: F,
    t0: f64,
    y0: SVector<f64, N>,
    t1: f64,
    tol: &Tolerances,
    dense: bool,
    mut observer: O,
) -> Result<(f64, SVector<f64, N>, Stats)>
where
    F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>>,
    O: FnMut(&DenseStep<N>) -> Result<Flow<N>>,
{
    let mut stats = Stats::default();
    if t1 == t0 {
        return Ok((t0, y0, stats));
    }
    let dir = (t1 - t0).signum();
    let hmax = if tol.max_step > 0.0 { tol.max_step } else { (t1 - t0).abs() };
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y)?;
    stats.evaluations += 1;
    check_finite(&k1, t)?;

    let mut h = if tol.initial_step > 0.0 {
        tol.initial_step.min(hmax) * dir
    } else {
        stats.evaluations += 1;
        initial_step(&mut f, t, &y, &k1, dir, hmax, tol)?
    };

    let mut k: [SVector<f64, N>; 16] = [SVector::zeros(); 16];
    let mut last_rejected = false;
    let mut last = false;

    loop {
        if stats.accepted + stats.rejected >= tol.max_steps {
            return Err(Error::MaxSteps {
                max_steps: tol.max_steps,
                t,
            });
        }
        if 0.1 * h.abs() <= t.abs() * UROUND {
            return Err(Error::StepSizeUnderflow { t });
        }
        if (t + 1.01 * h - t1) * dir > 0.0 {
            h = t1 - t;
            last = true;
        }

        k[0] = k1;
        for s in 1..12 {
            let mut acc = SVector::<f64, N>::zeros();
            for (j, &a) in A[s][..s].iter().enumerate() {
                if a != 0.0 {
                    acc += k[j] * a;
                }
            }
            k[s] = f(t + C[s] * h, &(y + acc * h))?;
        }
        stats.evaluations += 11;

        let mut incr = SVector::<f64, N>::zeros();
        let mut e5 = SVector::<f64, N>::zeros();
        for s in 0..12 {
            if B[s] != 0.0 {
                incr += k[s] * B[s];
            }
            if ER[s] != 0.0 {
                e5 += k[s] * ER[s];
            }
        }
        let e3 = incr - k[0] * BHH[0] - k[8] * BHH[1] - k[11] * BHH[2];
        let y_new = y + incr * h;

        let (mut err, mut err2) = (0.0, 0.0);
        for i in 0..N {
            let sk = tol.abs + tol.rel * y[i].abs().max(y_new[i].abs());
            err += (e5[i] / sk).powi(2);
            err2 += (e3[i] / sk).powi(2);
        }
        let mut deno = err + 0.01 * err2;
        if deno <= 0.0 {
            deno = 1.0;
        }
        let err = h.abs() * err * (1.0 / (N as f64 * deno)).sqrt();

        if !err.is_finite() {
            h *= 0.1;
            last = false;
            last_rejected = true;
            stats.rejected += 1;
            continue;
        }

        let fac11 = err.powf(EXPO);
        let fac = (fac11 / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
        let mut h_new = h / fac;

        if err <= 1.0 {
            let k13 = f(t + h, &y_new)?;
            stats.evaluations += 1;
            check_finite(&k13, t + h)?;
            k[12] = k13;

            let step = if dense {
                build_dense(&mut f, t, h, &y, &y_new, &mut k, &mut stats)?
            } else {
                DenseStep {
                    t0: t,
                    t1: t + h,
                    y0: y,
                    y1: y_new,
                    cont: None,
                }
            };
            stats.accepted += 1;

            if let Flow::Stop(ts, ys) = observer(&step)? {
                return Ok((ts, ys, stats));
            }

            k1 = k13;
            y = y_new;
            t += h;
            if last {
                return Ok((t, y, stats));
            }
            if h_new.abs() > hmax {
                h_new = hmax * dir;
            }
            if last_rejected {
                h_new = dir * h_new.abs().min(h.abs());
            }
            last_rejected = false;
        } else {
            h_new = h / (1.0 / FAC_MIN).min(fac11 / SAFETY);
            last_rejected = true;
            last = false;
            stats.rejected += 1;
        }
        h = h_new;
    }
}

fn check_finite<const N: usize>(v: &SVector<f64, N>, t: f64) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { t })
    }
}

fn build_dense<const N: usize, F>(
    f: &mut F,
    t: f64,
    h: f64,
    y: &SVector<f64, N>,
    y_new: &SVector<f64, N>,
    k: &mut [SVector<f64, N>; 16],
    stats: &mut Stats,
) -> Result<DenseStep<N>>
where
    F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>>,
{
    for (extra, row) in A_DENSE.iter().enumerate() {
        let s = 13 + extra;
        let mut acc = SVector::<f64, N>::zeros();
        for (j, &a) in row[..s].iter().enumerate() {
            if a != 0.0 {
                acc += k[j] * a;
            }
        }
        k[s] = f(t + C_DENSE[extra] * h, &(y + acc * h))?;
    }
    stats.evaluations += 3;

    let ydiff = y_new - y;
    let bspl = k[0] * h - ydiff;
    let mut cont = [SVector::<f64, N>::zeros(); 8];
    cont[0] = *y;
    cont[1] = ydiff;
    cont[2] = bspl;
    cont[3] = ydiff - k[12] * h - bspl;
    for (row, d) in D.iter().enumerate() {
        let mut acc = SVector::<f64, N>::zeros();
        for (j, &c) in d.iter().enumerate() {
            if c != 0.0 {
                acc += k[j] * c;
            }
        }
        cont[4 + row] = acc * h;
    }
    Ok(DenseStep {
        t0: t,
        t1: t + h,
        y0: *y,
        y1: *y_new,
        cont: Some(cont),
    })
}

fn initial_step<const N: usize, F>(
    f: &mut F,
    t: f64,
    y: &SVector<f64, N>,
    f0: &SVector<f64, N>,
    dir: f64,
    hmax: f64,
    tol: &Tolerances,
) -> Result<f64>
where
    F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>>,
{
    let sk = y.map(|v| tol.abs + tol.rel * v.abs());
    let dnf = f0.component_div(&sk).norm_squared();
    let dny = y.component_div(&sk).norm_squared();
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        (dny / dnf).sqrt() * 0.01
    };
    h = h.min(hmax) * dir;
    let f1 = f(t + h, &(y + f0 * h))?;
    let der2 = (f1 - f0).component_div(&sk).norm() / h.abs();
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 {
        (h.abs() * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(1.0 / 8.0)
    };
    Ok(dir * (100.0 * h.abs()).min(h1).min(hmax))
}
