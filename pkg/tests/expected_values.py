"""Frozen expected values. Generated by make_expected.py; do not edit."""

P1_DEFAULT = 6.10441356200546
P2_DEFAULT = -55.494668745504185
PHI_STAR_DEFAULT = 0.05549466874550418
P1_VIM = 2.4508646331655246
P2_VIM = -2.228058757423204
PHI_STAR_VIM = 0.22280587574232041
L0_STAR_VIM = 1.1783196534742952
ALPHA_AT_HALF = 0.6852030205072944
SX_EXAMPLE = 223.5663930694859
LAMBDA_STAR_HAND = 2.414213562373095
TABLE1_CASE1_T = (0.0, 10.0, 40.0, 80.0)
TABLE1_CASE1_K = (1.0000453978687025, 1.5000000000001872, 2.9999999999999063, 4.0)
GAIN_KM_BUNDLED = 0.768615807336057
GAIN_K45_BUNDLED = 1.1446249525686152
GAIN_MID_BUNDLED = 50.05
ESTIM_CHAIN_D1X = -2.8283886239038667
H_CHAIN_EIGS = (0.38196601125010515, 2.618033988749895)
KT1_SINGLE = 0.6729944740906774
KT2_SINGLE = 1.4270485380032654
TE_SINGLE = 18.362698078835376
RING_EIGS = (0.10878015128970649, 1.0, 1.2953756312328728, 3.0, 3.3174306079809757, 4.278413609496445)
KT1_RING = 0.0026581228879486263
KT2_RING = 0.0009051268170950635
TE_RING = 9286.14109803459
RBF_FEATURES_Z0 = (9.357622968840175e-14, 0.0005530843701478336, 1.0, 0.0005530843701478336, 9.357622968840175e-14, 4.843089239878731e-30)
DELTA_S0 = 0.031198933749100835
DELTA_S1 = 1.8060484865697424e-06
DELTA_S2 = 0.00020364432786901054
DELTA_S0_ZERO = 0.031098933749100836
GAMMA_O1_UNIT = 1.3366205509883244
GAMMA_O2_UNIT = 1.0856732455592584
T_IO_BOUND_UNIT = 11.646151153949752
T_COAB_FROM_13 = 4.738828147493806
T_COAB_FROM_130 = 7.194382644256977
T_COAB_FROM_1300 = 9.391935152073065
GIO_MIN_VIM = 16.0
GIO_MIN_PROOF_VIM = 18.013926184468016
LIOF_VIM = 0.8257228238447705
LIFO_VIM = 1.7013926184468013
LAMBDA_IO1_VIM = 16.200872241128252
LAMBDA_IO2_VIM = 81.71218941192134
LAMBDA_IO3_VIM = 125.3366498991832
LAMBDA_IO4_VIM = 257.83368504924607
ETA_IM1_VIM = 0.03359864413983825
ETA_IM2_VIM = 0.015435953599839162
ETA_IM3_VIM = 0.010505570086252808
ETA_IM4_VIM = 0.012908463527739238
T_I1_VIM = 1025.7464162701042
T_I2_VIM = 2716.5097912238684
T_I1_GENERIC = 29.347826086956523
LIOF_EXAMPLE = 1.2031880442944838
DELTA_S3_SYNTH = 2.075781631112427
DELTA_S4_SYNTH = 0.1550111361425082
DELTA_S_SYNTH = 0.1550111361425082
T_MAX_A_SYNTH = 11.666666666666666
T_MAX_B_SYNTH = 8.333333333333334
T_S1_SYNTH = 11.666666666666666
ETA1_SURF_DEFAULT = 0.23412266687497837
ETA2_SURF_DEFAULT = 0.1858232838434705
T_SURF_BOUND_DEFAULT = 59.67978597392341
ESC_ALPHA_IO = 1.6473337351196928
ESC_ALPHA_IF = -5.766749738997743
ESC_LAMBDA = 0.7610123078776853
