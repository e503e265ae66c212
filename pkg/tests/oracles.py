"""Reference values computed once with mpmath at 40 digits and frozen here."""

# Ei(x) on the negative axis, 30 significant digits
EI_TABLE = [
    (-1e-06, "-13.2382958930624912888088351054"),
    (-0.001, "-6.3315393641361493112069109415"),
    (-0.05, "-2.46789848850997431675606196601"),
    (-0.3, "-0.905676651675846739846109044231"),
    (-0.7, "-0.373768843233509175770643951777"),
    (-1.0, "-0.21938393439552027367716377546"),
    (-1.5, "-0.100019582406632651901909339912"),
    (-2.5, "-0.0249149178702697354956280122746"),
    (-4.0, "-0.00377935240984890647887486013247"),
    (-5.9, "-0.000403903508943129226312013200703"),
    (-6.1, "-0.000321087027949654833043039627436"),
    (-8.0, "-0.0000376656228439249017725579959508"),
    (-10.0, "-0.00000415696892968532427740285981028"),
    (-17.3, "-0.00000000168048888315892775443910873153"),
    (-30.0, "-3.02155201068881254481582504515e-15"),
    (-55.0, "-2.32139665626689254484178248514e-26"),
    (-100.0, "-3.68359776168203218023519262051e-46"),
    (-240.0, "-2.43957804943998282357595210142e-107"),
    (-500.0, "-1.42207678225363842209819393606e-220"),
    (-700.0, "-1.40651876623403292277441068511e-307"),
]

EI_POSITIVE = [
    (0.5, 0.45421990486317357992),
    (3.0, 9.933832570625416558),
    (20.0, 25615652.66405658882),
    (45.0, 794391603570445377.15),
    (100.0, 2.7155527448538798219e41),
]

# Q(a, x)
REG_GAMMA_Q = [
    (2.0, 5.0, 0.04042768199451280258),
    (0.5, 0.1, 0.65472084601857702044),
    (10.0, 3.0, 0.99889751186988452026),
    (100.0, 120.0, 0.027863739890520661484),
    (1000.0, 1050.0, 0.058671111377318077098),
]

# block LLR: (S, kappa, lambda, noise_var, alice_power) -> value
BLOCK_LLR = [
    ((4.8, 0.5, 1.0, 1.0, 1.0), 0.72077273578544669519),
    ((9.0, 0.5, 1.0, 1.0, 1.0), 1.7973607212024173507),
    ((0.2, 0.5, 1.0, 1.0, 1.0), -0.24091007369270839659),
    ((0.0, 0.5, 1.0, 1.0, 1.0), -0.2772405670085481615),
    ((3.0, 1.0, 1.0, 1.0, 1.0), 0.01605210526776689482),
    ((50.0, 4.0, 2.0, 1.5, 0.5), 2.51142119787942466),
    ((250.0, 100.0, 0.01, 1.0, 0.01), 1.2590133023515522279),
    ((0.0, 16.0, 0.5, 1.0, 0.1), -1.3990131918518669277),
    ((1000.0, 1.0, 0.01, 1.0, 1.0), 491.07732319641177552),
]

# 1/r + e^r Ei(-r) at r = 1 and r = 10
EI_GAP_R1 = 0.4036526376768059
EI_GAP_R10 = 0.00843666606
