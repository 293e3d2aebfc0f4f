import easyocr
import numpy as np
reader = easyocr.Reader(['en'])
for box, text, conf in reader.readtext(np.array(image_clue_0)):
    print(text, round(conf, 2))
