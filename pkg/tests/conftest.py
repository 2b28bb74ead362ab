"""Shared test constants: a miniature experiment config for fast CLI runs."""

MINI_CONFIG = """\
[dataset]
seed = 7
classes = 10
image_size = 16
train_count = 240
eval_in_count = 60
ood_eval_count = 120
ood_kinds = texture-noise, alien-glyphs
mix_seed = 1

[autoencoder]
seed = 11
epochs = 4
batch_size = 32
learning_rate = 0.002
optimizer = adam

[threshold]
tau = calibrated
sweep_step = 0.005

[generator]
seed = 13
target_score = 0.90
tolerance = 0.02
max_iterations = 300
step_size = 0.05
seed_mode = blend
train_count = 24
eval_count = 12

[binary]
seed = 17
epochs = 4
batch_size = 16
learning_rate = 0.002
optimizer = adam
decision_threshold = 0.5

[core]
seed = 19
epochs = 4
batch_size = 32
learning_rate = 0.002
optimizer = adam

[pipeline]
tau = calibrated
tier2_threshold = 0.5
tier1 = true
tier2 = true
"""
