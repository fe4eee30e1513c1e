#include "phmoea/space.hpp"

namespace phmoea {

namespace {

constexpr std::string_view kDocument = R"json({
  "variables": [
    {"index": 1, "name": "resampling", "label": "Resampling operator", "kind": "discrete",
     "candidates": ["linear", "decimate_repeat", "hybrid", "pool", "conv_blurpool", "fir_lowpass"]},
    {"index": 2, "name": "pool_type", "label": "Pooling type", "kind": "conditional-discrete",
     "candidates": ["avg", "max", "median", "weighted"],
     "parent": {"variable": "resampling", "values": ["pool"]}},
    {"index": 3, "name": "aligned_length", "label": "Aligned length", "kind": "discrete",
     "candidates": [8, 12, 24, 36, 48]},
    {"index": 4, "name": "batch_size", "label": "Batch size", "kind": "discrete",
     "candidates": [16, 32, 64, 128]},
    {"index": 5, "name": "norm", "label": "Normalization layer", "kind": "discrete",
     "candidates": ["BatchNorm", "LayerNorm", "InstanceNorm"]},
    {"index": 6, "name": "proj_channels", "label": "Projection channels", "kind": "discrete",
     "candidates": [8, 16, 32, 64]},
    {"index": 7, "name": "channels1", "label": "Channels (conv1)", "kind": "discrete",
     "candidates": [8, 16, 32, 64]},
    {"index": 8, "name": "channels2", "label": "Channels (conv2)", "kind": "discrete",
     "candidates": [16, 32, 64, 128]},
    {"index": 9, "name": "channels3", "label": "Channels (conv3)", "kind": "discrete",
     "candidates": [32, 64, 128, 256]},
    {"index": 10, "name": "short_kernels", "label": "Short-branch kernel sizes", "kind": "discrete",
     "candidates": [[3, 3, 3], [3, 5, 7], [3, 5, 9], [5, 7, 11]]},
    {"index": 11, "name": "long_kernels", "label": "Long-branch kernel sizes", "kind": "discrete",
     "candidates": [[7, 9, 11], [9, 11, 13], [11, 13, 15]]},
    {"index": 12, "name": "activation", "label": "Activation", "kind": "discrete",
     "candidates": ["ReLU", "GELU", "SiLU", "Tanh"]},
    {"index": 13, "name": "dropout", "label": "Dropout rate", "kind": "continuous",
     "range": [0.0, 0.5], "scale": "linear"},
    {"index": 14, "name": "learning_rate", "label": "Learning rate", "kind": "continuous",
     "range": [1e-05, 0.01], "scale": "log"},
    {"index": 15, "name": "weight_decay", "label": "Weight decay", "kind": "continuous",
     "range": [1e-06, 0.01], "scale": "log"},
    {"index": 16, "name": "lr_scheduler", "label": "Learning-rate scheduler", "kind": "discrete",
     "candidates": ["on", "off"]},
    {"index": 17, "name": "scheduler_type", "label": "Scheduler type", "kind": "conditional-discrete",
     "candidates": ["plateau", "warmup_cosine"],
     "parent": {"variable": "lr_scheduler", "values": ["on"]}},
    {"index": 18, "name": "loss", "label": "Loss type", "kind": "discrete",
     "candidates": ["MSE", "MAE", "SmoothL1", "MAPE", "Huber", "LogCosh", "Quantile", "SMAPE",
                    "Combined", "AdaptiveCombined"]},
    {"index": 19, "name": "combined_loss_pair", "label": "Combined-loss form", "kind": "conditional-discrete",
     "candidates": [["MSE", "MAE"], ["MSE", "Huber"], ["MAE", "Huber"], ["MAE", "MAPE"], ["MSE", "SMAPE"],
                    ["MAE", "Quantile"], ["Huber", "Quantile"], ["MAE", "multi_quantile"], ["MSE", "SmoothL1"],
                    ["MAE", "LogCosh"]],
     "parent": {"variable": "loss", "values": ["Combined", "AdaptiveCombined"]}},
    {"index": 20, "name": "loss_weights", "label": "Loss weights", "kind": "conditional-discrete",
     "candidates": [[0.9, 0.1], [0.7, 0.3], [0.5, 0.5]],
     "parent": {"variable": "loss", "values": ["AdaptiveCombined"]}},
    {"index": 21, "name": "loss_weight_lr", "label": "Learning rate for combined loss", "kind": "conditional-discrete",
     "candidates": [0.001, 0.01, 0.1, 0.2, 0.5],
     "parent": {"variable": "loss", "values": ["AdaptiveCombined"]}},
    {"index": 22, "name": "fusion", "label": "Fusion operator", "kind": "discrete",
     "candidates": ["concat", "add", "weighting", "gating", "attention", "cross_mapping"]},
    {"index": 23, "name": "weighting_mode", "label": "Weighting mode", "kind": "conditional-discrete",
     "candidates": ["add", "concat"],
     "parent": {"variable": "fusion", "values": ["weighting"]}},
    {"index": 24, "name": "cross_mapping_mode", "label": "Cross-mapping mode", "kind": "conditional-discrete",
     "candidates": ["add", "concat", "gated"],
     "parent": {"variable": "fusion", "values": ["cross_mapping"]}}
  ]
})json";

} // namespace

std::string_view builtin_space_document() { return kDocument; }

ConfigSpace builtin_space()
{
    static const ConfigSpace space = ConfigSpace::from_json(Json::parse(kDocument));
    return space;
}

} // namespace phmoea
