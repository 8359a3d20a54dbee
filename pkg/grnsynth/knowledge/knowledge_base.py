"""
LLM Knowledge Base
TF extraction over sliding gene windows and per-target regulator proposals
"""

from __future__ import annotations

from collections import Counter
from concurrent.futures import ThreadPoolExecutor

from grnsynth.grn.core import TfPartition, normalize_symbol, validate_grn
from grnsynth.knowledge.prompts import (
    REGULATOR_SELECTION,
    TF_EXTRACTION,
    default_template,
    parse_answer,
)
from grnsynth.utils.exceptions import (
    AnswerParseError,
    EmptyPartitionError,
    KnowledgeBaseError,
    RetriesExhaustedError,
    TooFewTfsError,
)
from grnsynth.utils.logger import setup_logger

logger = setup_logger(__name__)


def window_starts(n_genes, window, stride):
    """
    Start offsets of the sliding gene windows

    Windows start at 0, stride, 2*stride, ...; a final window aligned to
    the end is added when the last regular window stops short.

    Returns:
        list: Start offsets
    """
    if window < 1 or window > n_genes:
        raise ValueError(f"Window {window} must be in [1, {n_genes}]")
    if stride < 1 or stride > window:
        raise ValueError(f"Stride {stride} must be in [1, {window}]")

    starts = list(range(0, n_genes - window + 1, stride))
    if starts[-1] + window < n_genes:
        starts.append(n_genes - window)
    return starts


def extract_tf_partition(vocab, context, window, stride, client,
                         validate_membership=True, template=None, max_tfs=None, max_workers=1):
    """
    Ask the model which genes of each window are transcription factors

    Args:
        vocab: GeneVocabulary to partition
        context: Dataset context text
        window: Genes per query
        stride: Offset between consecutive windows
        client: ChatClient
        validate_membership: Drop proposals outside the queried window
            (otherwise any vocabulary member is accepted)
        template: PromptTemplate of kind tf_extraction
        max_tfs: Keep only the most frequently proposed TFs
        max_workers: Concurrent queries

    Returns:
        TfPartition: tfs = union of accepted proposals, targets = the rest
    """
    template = template or default_template(TF_EXTRACTION)
    starts = window_starts(len(vocab), window, stride)
    logger.info(f"Extracting TFs from {len(vocab)} genes in {len(starts)} windows")

    def query(start):
        genes = vocab.symbols[start:start + window]
        reply = client.ask(template.render(context, genes))
        try:
            proposed = parse_answer(reply).symbols
        except AnswerParseError as e:
            logger.warning(f"Window at {start}: unusable answer ({e}); no TFs taken")
            return []
        allowed = set(genes) if validate_membership else vocab.index
        accepted = [s for s in proposed if s in allowed]
        if len(accepted) < len(proposed):
            logger.info(f"Window at {start}: dropped {len(proposed) - len(accepted)} proposals")
        return accepted

    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        results = list(pool.map(query, starts))

    votes = Counter(symbol for accepted in results for symbol in accepted)
    if not votes:
        raise EmptyPartitionError("No TF survived validation")

    tfs = sorted(votes, key=lambda s: (-votes[s], vocab.position(s)))
    if max_tfs is not None and len(tfs) > max_tfs:
        logger.info(f"Capping {len(tfs)} proposed TFs to the {max_tfs} most frequent")
        tfs = tfs[:max_tfs]

    tf_set = frozenset(tfs)
    targets = frozenset(s for s in vocab.symbols if s not in tf_set)
    partition = TfPartition(tf_set, targets)
    logger.info(f"Partition: {len(partition.tfs)} TFs, {len(partition.targets)} targets")
    return partition


def _check_answer(symbols, offered, k):
    invalid = [s for s in symbols if s not in offered]
    if invalid:
        return f"symbols outside the offered TF list: {invalid[:5]}"
    if len(symbols) != k:
        return f"expected {k} TFs, got {len(symbols)}"
    return None


def propose_regulators(gene, tf_list, context, k, client, max_retries=3, template=None):
    """
    Ask the model for exactly k regulators of one gene

    Rejected answers are re-asked with the rejection reason appended to the
    single-turn prompt.

    Args:
        gene: Target gene symbol
        tf_list: Offered TF symbols
        context: Dataset context text
        k: Number of regulators
        client: ChatClient
        max_retries: Maximum number of requests
        template: PromptTemplate of kind regulator_selection

    Returns:
        list: k TF symbols in the order given by the model
    """
    template = template or default_template(REGULATOR_SELECTION)
    gene = normalize_symbol(gene)
    offered = [normalize_symbol(s) for s in tf_list]
    if gene in offered:
        raise KnowledgeBaseError(f"Target {gene} is in its own TF list")
    if len(offered) < k:
        raise TooFewTfsError(f"Need at least {k} TFs for {gene}, got {len(offered)}")

    offered_set = set(offered)
    prompt = template.render(context, offered, gene=gene, k=k)
    reason = None
    for attempt in range(1, max_retries + 1):
        text = prompt if reason is None else (
            f"{prompt}\n\nYour previous answer was rejected ({reason}). "
            f"Return exactly {k} TFs from the list."
        )
        reply = client.ask(text)
        try:
            symbols = list(parse_answer(reply).symbols)
        except AnswerParseError as e:
            reason = str(e)
        else:
            reason = _check_answer(symbols, offered_set, k)
            if reason is None:
                return symbols
        logger.warning(f"Attempt {attempt}/{max_retries} for {gene} rejected: {reason}")
    raise RetriesExhaustedError(gene, reason, max_retries)


def build_llm_grn(partition, context, k, client, max_retries=3, template=None, max_workers=1):
    """
    Assemble a GRN from per-target regulator proposals

    Args:
        partition: TfPartition
        context: Dataset context text
        k: Regulators per target
        client: ChatClient (cache-through clients store every exchange
            before it is parsed)
        max_retries: Requests per target
        template: PromptTemplate of kind regulator_selection
        max_workers: Concurrent targets

    Returns:
        Grn: Validated graph
    """
    if len(partition.tfs) < k:
        raise TooFewTfsError(f"Need at least {k} TFs, partition has {len(partition.tfs)}")

    tf_list = list(partition.sorted_tfs)
    targets = list(partition.sorted_targets)
    logger.info(f"Proposing {k} regulators for {len(targets)} targets")

    def propose(target):
        try:
            return propose_regulators(target, tf_list, context, k, client,
                                      max_retries=max_retries, template=template)
        except RetriesExhaustedError as e:
            logger.error(f"Regulator proposal failed for target {target}: {e.reason}")
            raise

    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        futures = {target: pool.submit(propose, target) for target in targets}
        # results are read in target order so the first failing target is reported
        regulators = {target: futures[target].result() for target in targets}

    edges = [(tf, target) for target in targets for tf in regulators[target]]
    return validate_grn(partition, edges, k)
