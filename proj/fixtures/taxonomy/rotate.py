import matplotlib.pyplot as plt
# the photo is upside down
upright = image_clue_0.rotate(180)
plt.imshow(upright)
plt.show()
