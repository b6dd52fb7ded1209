//! Published benchmark reference tables shared by the integration suites.
// Table literals trip the approximate-constant lint (6.28 reads as tau).
#![allow(dead_code, clippy::approx_constant)]

pub const METHODS: [&str; 9] = [
    "Regression",
    "DEX",
    "SORD",
    "DLDL",
    "DLDL-v2",
    "OR-CNN",
    "Mean-Var.",
    "CORAL",
    "CORN",
];
pub const DATASETS: [&str; 6] = ["AFAD", "AgeDB", "CACD2000", "CLAP2016", "UTKFace", "MORPH"];

/// Published GZSL test results: per method, the (S, U, H) triple for each of
/// the six datasets followed by the All column.
pub const GZSL_TABLE: [[(f64, f64, f64); 7]; 9] = [
    // Regression
    [
        (3.03, 4.60, 3.65),
        (7.78, 17.81, 10.83),
        (6.16, 12.65, 8.28),
        (3.22, 15.10, 5.31),
        (4.45, 17.37, 7.09),
        (3.35, 4.27, 3.75),
        (4.66, 11.97, 6.49),
    ],
    // DEX
    [
        (3.07, 4.79, 3.74),
        (8.64, 19.15, 11.90),
        (6.28, 12.55, 8.37),
        (4.52, 15.26, 6.98),
        (5.19, 18.94, 8.15),
        (3.07, 3.04, 3.05),
        (5.13, 12.29, 7.03),
    ],
    // SORD
    [
        (3.07, 4.65, 3.69),
        (8.21, 16.97, 11.07),
        (6.25, 12.04, 8.23),
        (3.79, 16.09, 6.13),
        (4.75, 17.58, 7.47),
        (3.09, 2.98, 3.03),
        (4.86, 11.72, 6.61),
    ],
    // DLDL
    [
        (3.05, 4.98, 3.79),
        (8.39, 17.34, 11.31),
        (6.17, 12.58, 8.27),
        (3.91, 15.21, 6.22),
        (4.70, 17.40, 7.40),
        (3.00, 3.31, 3.15),
        (4.87, 11.80, 6.69),
    ],
    // DLDL-v2
    [
        (3.12, 4.76, 3.77),
        (8.08, 17.29, 11.01),
        (6.30, 13.45, 8.58),
        (3.85, 16.31, 6.22),
        (4.60, 18.18, 7.34),
        (2.96, 3.35, 3.15),
        (4.82, 12.23, 6.68),
    ],
    // OR-CNN
    [
        (3.21, 4.81, 3.85),
        (7.60, 17.42, 10.58),
        (6.34, 14.79, 8.88),
        (3.73, 14.63, 5.95),
        (4.61, 17.86, 7.32),
        (3.03, 3.74, 3.35),
        (4.75, 12.21, 6.65),
    ],
    // Mean-Var.
    [
        (3.01, 4.45, 3.59),
        (8.02, 16.08, 10.70),
        (6.27, 12.86, 8.43),
        (3.91, 14.17, 6.13),
        (4.58, 16.65, 7.18),
        (2.98, 3.00, 2.99),
        (4.79, 11.20, 6.50),
    ],
    // CORAL
    [
        (3.07, 4.94, 3.78),
        (9.15, 19.65, 12.49),
        (6.26, 14.13, 8.67),
        (3.43, 15.77, 5.64),
        (4.56, 18.71, 7.33),
        (2.91, 4.82, 3.63),
        (4.90, 13.00, 6.92),
    ],
    // CORN
    [
        (3.21, 4.80, 3.84),
        (7.33, 18.09, 10.43),
        (6.21, 13.74, 8.55),
        (4.05, 15.38, 6.41),
        (4.89, 17.53, 7.64),
        (3.07, 3.52, 3.28),
        (4.79, 12.18, 6.69),
    ],
];

/// Published Mean and Std rows of the GZSL table (population std), per
/// column including All.
pub const GZSL_MEAN_ROW: [(f64, f64, f64); 7] = [
    (3.09, 4.75, 3.74),
    (8.13, 17.76, 11.15),
    (6.25, 13.20, 8.47),
    (3.82, 15.32, 6.11),
    (4.70, 17.80, 7.44),
    (3.05, 3.56, 3.26),
    (4.84, 12.07, 6.70),
];
pub const GZSL_STD_ROW: [(f64, f64, f64); 7] = [
    (0.07, 0.16, 0.08),
    (0.52, 1.03, 0.63),
    (0.06, 0.84, 0.20),
    (0.35, 0.64, 0.44),
    (0.21, 0.67, 0.29),
    (0.12, 0.59, 0.25),
    (0.12, 0.46, 0.17),
];

/// Published supervised-baseline test MAE: six datasets plus the All column.
pub const SUPERVISED_TABLE: [[f64; 7]; 9] = [
    [3.21, 6.18, 4.53, 4.32, 4.52, 2.80, 4.26],
    [3.34, 7.16, 4.69, 6.19, 5.25, 3.38, 5.00],
    [3.33, 6.85, 4.72, 5.44, 4.97, 3.17, 4.75],
    [3.32, 6.85, 4.71, 5.18, 4.96, 3.00, 4.67],
    [3.34, 6.54, 4.66, 5.12, 4.73, 3.00, 4.56],
    [3.17, 6.31, 4.54, 4.71, 4.57, 2.86, 4.36],
    [3.17, 6.39, 4.58, 4.78, 4.67, 2.85, 4.41],
    [3.21, 6.19, 4.87, 5.11, 4.95, 2.83, 4.53],
    [3.33, 6.73, 4.57, 5.39, 5.04, 2.98, 4.67],
];
