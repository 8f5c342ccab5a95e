"""
attention_lab: efficient attention variants for self-supervised audio transformers

Sub-packages:
    core         numeric matrices and reverse-mode gradients
    attention    baseline, sparse, LSH and SYNTHESIZER attention
    models       residual encoder over any variant
    benchmark    theoretical cost model and wall-clock runner
    pretraining  masked-frame pretraining and attention analysis
"""

__version__ = "0.1.0"
