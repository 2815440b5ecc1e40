"""Writes tiny ONNX dual encoders and reference embeddings for tests.

The encoders are small enough to commit but sensitive to pixel layout, crop
position, token order and the attention mask. Expected embeddings are
computed with numpy and torchvision, not with ONNX Runtime.

Outputs (in tests/data/models/):
  image_encoder.onnx      pixel_values [N,3,224,224] -> image_embeds [N,8]
  text_encoder.onnx       input_ids, attention_mask int64 [N,77] -> text_embeds [N,8]
  text_encoder_int32.onnx input_ids int32 [N,77] -> text_embeds [N,8]
  vocab.json, merges.txt  copied from tests/data/tokenizer
  images/*.png            sample inputs
  expected.json           reference embeddings (L2-normalized)
"""

import argparse
import json
import pathlib
import shutil

import numpy as np
import onnx
from onnx import TensorProto, helper, numpy_helper

DIM = 8
CONTEXT = 77
POOL = 56
MEAN = np.array([0.48145466, 0.4578275, 0.40821073], dtype=np.float32)
STD = np.array([0.26862954, 0.26130258, 0.27577711], dtype=np.float32)

TEXTS = [
    "A picture of a person",
    "A picture of a male person",
    "A picture of a person with hat",
    "A picture of a woman",
]


def image_model(w, b):
    nodes = [
        helper.make_node("AveragePool", ["pixel_values"], ["pooled"], kernel_shape=[POOL, POOL], strides=[POOL, POOL]),
        helper.make_node("Flatten", ["pooled"], ["flat"], axis=1),
        helper.make_node("MatMul", ["flat", "W"], ["proj"]),
        helper.make_node("Add", ["proj", "B"], ["image_embeds"]),
    ]
    graph = helper.make_graph(
        nodes,
        "tiny_image_encoder",
        [helper.make_tensor_value_info("pixel_values", TensorProto.FLOAT, ["batch", 3, 224, 224])],
        [helper.make_tensor_value_info("image_embeds", TensorProto.FLOAT, ["batch", DIM])],
        [numpy_helper.from_array(w, "W"), numpy_helper.from_array(b, "B")],
    )
    return finish(graph)


def text_model(table, positions, with_mask, id_type):
    inputs = [helper.make_tensor_value_info("input_ids", id_type, ["batch", CONTEXT])]
    nodes = [
        helper.make_node("Gather", ["E", "input_ids"], ["tok"], axis=0),
        helper.make_node("Mul", ["tok", "P"], ["weighted"]),
    ]
    summed_input = "weighted"
    if with_mask:
        inputs.append(helper.make_tensor_value_info("attention_mask", TensorProto.INT64, ["batch", CONTEXT]))
        nodes += [
            helper.make_node("Cast", ["attention_mask"], ["maskf"], to=TensorProto.FLOAT),
            helper.make_node("Unsqueeze", ["maskf", "last_axis"], ["mask3"]),
            helper.make_node("Mul", ["weighted", "mask3"], ["masked"]),
        ]
        summed_input = "masked"
    # Without a mask, padding ids (0) select row 0 of E, which is zeroed.
    nodes.append(helper.make_node("ReduceSum", [summed_input, "seq_axis"], ["text_embeds"], keepdims=0))
    init = [
        numpy_helper.from_array(table, "E"),
        numpy_helper.from_array(positions, "P"),
        numpy_helper.from_array(np.array([1], dtype=np.int64), "seq_axis"),
        numpy_helper.from_array(np.array([2], dtype=np.int64), "last_axis"),
    ]
    graph = helper.make_graph(
        nodes,
        "tiny_text_encoder",
        inputs,
        [helper.make_tensor_value_info("text_embeds", TensorProto.FLOAT, ["batch", DIM])],
        init,
    )
    return finish(graph)


def finish(graph):
    model = helper.make_model(graph, opset_imports=[helper.make_opsetid("", 17)], producer_name="guesswho-tests")
    model.ir_version = 8
    onnx.checker.check_model(model)
    return model


def sample_images():
    rng = np.random.default_rng(7)
    out = {}
    h, w = 200, 300
    y, x = np.mgrid[0:h, 0:w]
    grad = np.stack([x * 255 // (w - 1), y * 255 // (h - 1), (x + y) * 255 // (w + h - 2)], axis=-1)
    out["gradient_300x200.png"] = grad.astype(np.uint8)
    out["noise_120x160.png"] = rng.integers(0, 256, size=(160, 120, 3), dtype=np.uint8)
    blocks = np.kron(rng.integers(0, 256, size=(6, 8, 3)), np.ones((80, 80, 1))).astype(np.uint8)
    out["blocks_640x480.png"] = blocks
    out["square_224.png"] = np.kron(rng.integers(0, 256, size=(28, 28, 3)), np.ones((8, 8, 1))).astype(np.uint8)
    return out


def preprocess(rgb):
    import torch
    from torchvision.transforms import InterpolationMode
    from torchvision.transforms import functional as F

    t = torch.from_numpy(rgb.astype(np.float32) / 255.0).permute(2, 0, 1)
    t = F.resize(t, 224, interpolation=InterpolationMode.BICUBIC, antialias=False)
    t = F.center_crop(t, [224, 224])
    t = t.clamp(0.0, 1.0)
    t = (t - torch.from_numpy(MEAN)[:, None, None]) / torch.from_numpy(STD)[:, None, None]
    return t.numpy()


def image_forward(tensor, w, b):
    pooled = tensor.reshape(3, 224 // POOL, POOL, 224 // POOL, POOL).mean(axis=(2, 4))
    return pooled.reshape(-1).astype(np.float64) @ w.astype(np.float64) + b.astype(np.float64)


def text_forward(ids, mask, table, positions):
    ids = np.asarray(ids)
    m = np.asarray(mask, dtype=np.float64)[:, None]
    return (table[ids].astype(np.float64) * positions.astype(np.float64) * m).sum(axis=0)


def unit(v):
    v = np.asarray(v, dtype=np.float64)
    return (v / np.linalg.norm(v)).tolist()


def main():
    root = pathlib.Path(__file__).resolve().parents[1]
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=root / "tests" / "data" / "models")
    ap.add_argument("--tokenizer", default=root / "tests" / "data" / "tokenizer")
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    (out / "images").mkdir(parents=True, exist_ok=True)
    tok_dir = pathlib.Path(args.tokenizer)
    for name in ("vocab.json", "merges.txt"):
        shutil.copy(tok_dir / name, out / name)
    vocab = json.loads((out / "vocab.json").read_text(encoding="utf-8"))

    rng = np.random.default_rng(2024)
    w = rng.normal(size=(3 * (224 // POOL) ** 2, DIM)).astype(np.float32)
    b = rng.normal(scale=0.1, size=(DIM,)).astype(np.float32)
    table = rng.normal(size=(len(vocab), DIM)).astype(np.float32)
    table[0] = 0.0
    positions = rng.uniform(0.5, 1.5, size=(CONTEXT, DIM)).astype(np.float32)

    onnx.save(image_model(w, b), out / "image_encoder.onnx")
    onnx.save(text_model(table, positions, True, TensorProto.INT64), out / "text_encoder.onnx")
    onnx.save(text_model(table, positions, False, TensorProto.INT32), out / "text_encoder_int32.onnx")

    import cv2
    from transformers import CLIPTokenizer

    expected = {"dim": DIM, "images": [], "texts": []}
    for name, rgb in sample_images().items():
        cv2.imwrite(str(out / "images" / name), cv2.cvtColor(rgb, cv2.COLOR_RGB2BGR))
        decoded = cv2.cvtColor(cv2.imread(str(out / "images" / name)), cv2.COLOR_BGR2RGB)
        assert np.array_equal(decoded, rgb)
        tensor = preprocess(rgb)
        expected["images"].append(
            {
                "file": name,
                "embedding": unit(image_forward(tensor, w, b)),
                "tensor_probe": [[c, y, x, float(tensor[c, y, x])] for c, y, x in [(0, 0, 0), (1, 100, 37), (2, 223, 223), (0, 112, 5)]],
            }
        )

    tok = CLIPTokenizer(str(out / "vocab.json"), str(out / "merges.txt"))
    for text in TEXTS:
        ids = tok(text)["input_ids"]
        padded = ids + [0] * (CONTEXT - len(ids))
        mask = [1] * len(ids) + [0] * (CONTEXT - len(ids))
        expected["texts"].append({"text": text, "ids": ids, "embedding": unit(text_forward(padded, mask, table, positions))})

    (out / "expected.json").write_text(json.dumps(expected, indent=1), encoding="utf-8")

    # Cross-check the graphs against the numpy reference when a runtime is present.
    try:
        import onnxruntime as ort
    except ImportError:
        return
    sess = ort.InferenceSession(str(out / "text_encoder.onnx"))
    for case in expected["texts"]:
        ids = case["ids"] + [0] * (CONTEXT - len(case["ids"]))
        mask = [1] * len(case["ids"]) + [0] * (CONTEXT - len(case["ids"]))
        got = sess.run(None, {"input_ids": np.array([ids], np.int64), "attention_mask": np.array([mask], np.int64)})[0][0]
        assert np.allclose(unit(got), case["embedding"], atol=1e-5)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
