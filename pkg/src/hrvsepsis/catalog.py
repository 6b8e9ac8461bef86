"""Names and short descriptions of the 57 HRV metrics, in dataset column order."""

HRV_FEATURES = (
    ("Mean.rate", "heart rate in BPM"),
    ("Coefficient.of.variation", "ratio of the standard deviation to the mean"),
    ("Poincar..SD1", "Poincaré plot standard deviation perpendicular the line of identity"),
    ("Poincar..SD2", "Poincaré plot standard deviation along the line of identity"),
    ("LF.HF.ratio.LS", "Ratio of LF-to-HF power"),
    ("LF.Power.LS", "power of the low-frequency band"),
    ("HF.Power.LS", "power of the high-frequency band"),
    ("DFA.Alpha.1", "Detrended fluctuation analysis, which describes short-term fluctuations"),
    ("DFA.Alpha.2", "Detrended fluctuation analysis, which describes long-term fluctuations"),
    ("Largest.Lyapunov.exponent", "measures a non-linear system's sensitive dependence on starting conditions"),
    ("Correlation.dimension", "Estimate of required model variables"),
    ("Power.Law.Slope.LS", "Power Law (based on frequency) slope x^2"),
    ("Power.Law.Y.Intercept.LS", "Power Law (based on frequency) y-intercept x^2"),
    ("DFA.AUC", "Detrended fluctuation analysis: area under the curve"),
    ("Multiscale.Entropy", "Multiscale entropy - measures the regularity and complexity of a time series"),
    ("VLF.Power.LS", "Absolute power of the very-low-frequency band"),
    ("Complexity", "Hjorth parameter complexity"),
    ("eScaleE", "Embedding scaling exponent"),
    ("pR", "Recurrence quantification analysis: percentage of recurrences"),
    ("pD", "Recurrence quantification analysis: percentage of determinism"),
    ("dlmax", "Recurrence quantification analysis: maximum diagonal line"),
    ("sedl", "Recurrence quantification analysis: Shannon entropy of the diagonals"),
    ("pDpR", "Recurrence quantification analysis: determinism/recurrences"),
    ("pL", "Recurrence quantification analysis: percentage of laminarity"),
    ("vlmax", "Recurrence quantification analysis: maximum vertical line"),
    ("sevl", "Recurrence quantification analysis: Shannon entropy of the vertical lines"),
    ("shannEn", "Shannon entropy, measures uncertainty in a random variable"),
    ("PSeo", "Plotkin and Swamy energy operator: average energy"),
    ("Teo", "Teager energy operator: average energy"),
    ("SymDp0_2", "Symbolic dynamics: percentage of 0 variations sequences, non-uniform case"),
    ("SymDp1_2", "Symbolic dynamics: percentage of 1 variations sequences, non-uniform case"),
    ("SymDp2_2", "Symbolic dynamics: percentage of 2 variations sequences, non-uniform case"),
    ("SymDfw_2", "Symbolic dynamics: forbidden words, non-uniform case"),
    ("SymDse_2", "Symbolic dynamics: Shannon entropy, non-uniform case"),
    ("SymDce_2", "Symbolic dynamics: modified conditional entropy, non-uniform case"),
    ("formF", "Form factor"),
    ("gcount", "Grid transformation feature: grid count"),
    ("sgridAND", "Grid transformation feature: AND similarity index"),
    ("sgridTAU", "Grid transformation feature: time delay similarity index"),
    ("sgridWGT", "Grid transformation feature: weighted similarity index"),
    ("aFdP", "Allan factor distance from a Poisson distribution"),
    ("fFdP", "Fano factor distance from a Poisson distribution"),
    ("IoV", "Index of variability distance from a Poisson distribution"),
    ("KLPE", "Kullback-Leibler permutation entropy"),
    ("AsymI", "Multiscale time irreversibility asymmetry index"),
    ("CSI", "Poincaré plot cardiac sympathetic index"),
    ("CVI", "Poincaré plot cardiac vagal index"),
    ("ARerr", "Predictive feature: error from an autoregressive model"),
    ("histSI", "Similarity index of the distributions"),
    ("MultiFractal_c1", "Multifractal spectrum cumulant of the first order"),
    ("MultiFractal_c2", "Multifractal spectrum cumulant of the second order"),
    ("SDLEalpha", "Scale-dependent Lyapunov exponent slope"),
    ("SDLEmean", "Scale-dependent Lyapunov exponent mean value"),
    ("QSE", "Quadratic sample entropy"),
    ("Hurst.exponent", "Rate at which autocorrelations decrease as the lag between pairs of values increases"),
    ("mean", "Mean value"),
    ("median", "Median value"),
)
