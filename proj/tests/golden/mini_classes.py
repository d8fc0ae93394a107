class entity(concept):
    """that which is perceived or known or inferred to have its own distinct existence"""

    def __init__(self, location, attributes):
        self.location = location
        self.attributes = attributes

class organism(entity):
    """a living thing that has or can develop the ability to act or function independently"""

    def __init__(self, location, attributes):
        self.location = location
        self.attributes = attributes

class person(organism):
    """a human being"""

    def __init__(self, location, attributes):
        self.location = location
        self.attributes = attributes

class animal(organism):
    """a living organism characterized by voluntary movement"""

    def __init__(self, location, attributes):
        self.location = location
        self.attributes = attributes

class equine(animal):
    """hoofed mammals having slender legs and a flat coat with a narrow mane along the back of the neck"""

    def __init__(self, location, attributes):
        self.location = location
        self.attributes = attributes

class horse(equine):
    """solid-hoofed herbivorous quadruped domesticated since prehistoric times"""

    def __init__(self, location, attributes):
        self.location = location
        self.attributes = attributes

class plant(organism):
    """a living organism lacking the power of locomotion"""

    def __init__(self, location, attributes):
        self.location = location
        self.attributes = attributes

class grass(plant):
    """narrow-leaved green herbage: grown as lawns; used as pasture for grazing animals"""

    def __init__(self, location, attributes):
        self.location = location
        self.attributes = attributes

class hay(plant):
    """grass mowed and cured for use as fodder"""

    def __init__(self, location, attributes):
        self.location = location
        self.attributes = attributes

class walk_on(concept):
    """move on foot over a surface"""

    def __init__(self, location, attributes):
        self.location = location
        self.attributes = attributes

class brown(concept):
    """of a color similar to that of wood or earth"""

    def __init__(self, location, attributes):
        self.location = location
        self.attributes = attributes

class hungry(concept):
    """feeling a need or desire to eat food"""

    def __init__(self, location, attributes):
        self.location = location
        self.attributes = attributes

class ingestion(event):
    """An Ingestor consumes food or drink (Ingestibles)"""

    def __init__(self, ingestor, ingestibles):
        self.ingestor = ingestor
        self.ingestibles = ingestibles

class self_motion(event):
    """The Self_mover moves under its own power"""

    def __init__(self, self_mover):
        self.self_mover = self_mover

class placing(event):
    """An Agent places a Theme at a Goal"""

    def __init__(self, agent, theme, goal):
        self.agent = agent
        self.theme = theme
        self.goal = goal
