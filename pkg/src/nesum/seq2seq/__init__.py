"""Attentional GRU encoder-decoder for headline generation, optionally with NER input features."""

from .checkpoint import load_checkpoint, save_checkpoint
from .model import (
    NER_DIM,
    Batch,
    Encoding,
    Example,
    ModelConfig,
    ModelParams,
    attention_weights,
    context_vector,
    decode_step,
    encode,
    forward_loss,
    gradients,
    greedy_decode,
    greedy_decode_ids,
    init_params,
    loss_and_gradients,
    make_example,
    ner_index,
    ner_one_hot,
)
from .train import TrainingLog, dataset_loss, train
from .vocab import EOS, PAD, SOS, UNK, Vocab, build_vocab
