latent_dim = 128
full_num_points = 2048
desk_num_points = 256
upsampling_num_points = 256
leaky_slope = 0.2
channel_stats_eps = 1e-5
batch_norm_eps = 1e-5
batch_norm_momentum = 0.9
se_reduction = 4
adam_eps = 1e-8
jsd_grid_resolution = 28
train_fraction_percent = 85
hungarian_max_points = 512
zero_distance_threshold = 1e-12
# reporting scale factors for the metric tables
cd_report_scale = 1e4
emd_report_scale = 1e2
jsd_report_scale = 1e2
percent_scale = 1e2
