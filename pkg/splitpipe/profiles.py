# -*- coding: utf-8 -*-
"""
Built-in layer profiles used by the scenario generator.
"""
# (name, input channels, output channels, input side, pooled after)
VGG16_CONVS = (
    ('conv1_1', 3, 64, 32, False),
    ('conv1_2', 64, 64, 32, True),
    ('conv2_1', 64, 128, 16, False),
    ('conv2_2', 128, 128, 16, True),
    ('conv3_1', 128, 256, 8, False),
    ('conv3_2', 256, 256, 8, False),
    ('conv3_3', 256, 256, 8, True),
    ('conv4_1', 256, 512, 4, False),
    ('conv4_2', 512, 512, 4, False),
    ('conv4_3', 512, 512, 4, True),
    ('conv5_1', 512, 512, 2, False),
    ('conv5_2', 512, 512, 2, False),
    ('conv5_3', 512, 512, 2, True),
)
VGG16_DENSE = (
    ('fc1', 512, 512),
    ('fc2', 512, 512),
    ('fc3', 512, 10),
)
VALUE_BITS = 16
KERNEL = 3


def _record(name, fp_work, outputs, params):
    bits = float(outputs * VALUE_BITS)
    return {
        'name': name,
        'fp_work': float(fp_work),
        'bp_work': 2.0 * fp_work,
        'act_size': bits,
        'grad_size': bits,
        'opt_state': 0.0,
        'params': float(params * VALUE_BITS),
    }


def vgg16_layers():
    """VGG-16 on 32x32 inputs, fp16 storage, SGD without momentum."""
    records = []
    for name, cin, cout, side, pooled in VGG16_CONVS:
        fp_work = 2 * KERNEL * KERNEL * cin * cout * side * side
        out_side = side // 2 if pooled else side
        params = KERNEL * KERNEL * cin * cout + cout
        records.append(_record(name, fp_work, cout * out_side * out_side, params))
    for name, cin, cout in VGG16_DENSE:
        records.append(_record(name, 2 * cin * cout, cout, cin * cout + cout))
    return records


def random_layers(rng, count):
    records = []
    for position in range(1, count + 1):
        fp_work = rng.uniform(5e7, 5e8)
        act_size = rng.uniform(1e4, 2e6)
        params = rng.uniform(1e5, 5e7)
        records.append({
            'name': 'layer{}'.format(position),
            'fp_work': fp_work,
            'bp_work': 2.0 * fp_work,
            'act_size': act_size,
            'grad_size': act_size,
            'opt_state': params,
            'params': params,
        })
    return records


PROFILES = {
    'vgg16': lambda rng, count: vgg16_layers(),
    'random': random_layers,
}
