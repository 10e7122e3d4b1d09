from onlinemetric import rng as rngmod


def test_spawn_is_deterministic():
    a = rngmod.spawn(7, rngmod.RADIUS, 3).random(5)
    b = rngmod.spawn(7, rngmod.RADIUS, 3).random(5)
    assert (a == b).all()


def test_keys_separate_streams():
    a = rngmod.spawn(7, rngmod.RADIUS, 3).random()
    assert a != rngmod.spawn(7, rngmod.RADIUS, 4).random()
    assert a != rngmod.spawn(8, rngmod.RADIUS, 3).random()
    assert a != rngmod.spawn(7, rngmod.TREAP, 3).random()


def test_negative_keys_are_distinct():
    assert rngmod.spawn(1, -1).random() != rngmod.spawn(1, 1).random()
    assert [rngmod.zigzag(v) for v in (0, -1, 1, -2, 2)] == [0, 1, 2, 3, 4]
