"""Misbehaving challenge-API model: frame timestamps run backwards."""

import stub_model


def load_model(weights_path=None, device=None):
    return stub_model.load_model(weights_path, device)


def get_scene_embeddings(audio, model):
    return stub_model.get_scene_embeddings(audio, model)


def get_timestamp_embeddings(audio, model):
    embeddings, times = stub_model.get_timestamp_embeddings(audio, model)
    return embeddings, times[:, ::-1]
